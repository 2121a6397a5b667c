#include "chaintrace/fixture.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>

#include "chaintrace/addrcodec.hpp"
#include "chaintrace/hash.hpp"
#include "chaintrace/util.hpp"

namespace chaintrace::fixture {

namespace {

using blockparse::Block;
using blockparse::Transaction;
using blockparse::TxInput;
using blockparse::TxOutput;

constexpr std::int64_t kCoin = 100000000;

// Deterministic throwaway address: no private key exists, which is fine
// because the parser never checks signatures.
std::string addr_for(std::string_view label) {
    Digest256 h = sha256(as_bytes(label));
    std::array<std::uint8_t, 20> payload{};
    std::copy_n(h.begin(), payload.size(), payload.begin());
    return addrcodec::encode(0x00, payload);
}

std::vector<std::uint8_t> p2pkh_script(const std::string& address) {
    auto decoded = addrcodec::validate(address);
    if (!decoded.ok()) throw std::logic_error("fixture address failed validation");
    std::vector<std::uint8_t> script;
    script.reserve(25);
    script.assign({0x76, 0xa9, 0x14});
    script.insert(script.end(), decoded.decoded->payload.begin(),
                  decoded.decoded->payload.end());
    script.push_back(0x88);
    script.push_back(0xac);
    return script;
}

std::vector<std::uint8_t> p2pk_script(std::span<const std::uint8_t> pubkey) {
    std::vector<std::uint8_t> script;
    script.push_back(static_cast<std::uint8_t>(pubkey.size()));
    script.insert(script.end(), pubkey.begin(), pubkey.end());
    script.push_back(0xac);
    return script;
}

// Breaks the checksum while keeping the Base58 shape, for decoy corpus text.
std::string corrupt(const std::string& address) {
    std::string out = address;
    std::size_t pos = out.size() / 2;
    out[pos] = (out[pos] == '2') ? '3' : '2';
    if (addrcodec::validate(out).ok()) throw std::logic_error("corruption failed");
    return out;
}

struct Utxo {
    Digest256 txid{};
    std::uint32_t vout = 0;
    std::int64_t value = 0;
};

struct Out {
    std::vector<std::uint8_t> script;
    std::int64_t value = 0;
    std::string wallet_key;  // empty: output is never spent later
};

class WorldBuilder {
public:
    explicit WorldBuilder(std::uint64_t seed) : rng_(seed) {}

    Out pay(const std::string& address, std::int64_t value) {
        return {p2pkh_script(address), value, address};
    }

    Out pay_pubkey(std::span<const std::uint8_t> pubkey, const std::string& derived,
                   std::int64_t value) {
        return {p2pk_script(pubkey), value, derived};
    }

    Out burn(std::vector<std::uint8_t> script, std::int64_t value) {
        return {std::move(script), value, ""};
    }

    // Removes the oldest UTXO of the address with the given value, or the
    // oldest of any value when value < 0.
    Utxo take(const std::string& address, std::int64_t value = -1) {
        auto& queue = wallet_[address];
        for (auto it = queue.begin(); it != queue.end(); ++it) {
            if (value < 0 || it->value == value) {
                Utxo u = *it;
                queue.erase(it);
                return u;
            }
        }
        throw std::logic_error("fixture wallet underflow at " + address);
    }

    std::int64_t balance(const std::string& address) const {
        std::int64_t total = 0;
        auto it = wallet_.find(address);
        if (it == wallet_.end()) return 0;
        for (const auto& u : it->second) total += u.value;
        return total;
    }

    std::size_t utxo_count(const std::string& address) const {
        auto it = wallet_.find(address);
        return it == wallet_.end() ? 0 : it->second.size();
    }

    // Spends the given inputs; any surplus goes back to change_addr. Fees
    // are zero so values stay round.
    void spend(std::vector<Utxo> inputs, std::vector<Out> outs,
               const std::string& change_addr) {
        std::int64_t sum_in = 0;
        for (const auto& u : inputs) sum_in += u.value;
        std::int64_t sum_out = 0;
        for (const auto& o : outs) sum_out += o.value;
        if (sum_out > sum_in) throw std::logic_error("fixture tx overspends");
        if (sum_in > sum_out) outs.push_back(pay(change_addr, sum_in - sum_out));

        Transaction tx;
        for (const auto& u : inputs) {
            TxInput in;
            in.prev_txid = u.txid;
            in.prev_vout = u.vout;
            in.script_sig = {0x51};  // placeholder; signatures are not modeled
            tx.inputs.push_back(std::move(in));
        }
        for (const auto& o : outs) tx.outputs.push_back({o.value, o.script});
        commit(std::move(tx), outs);
    }

    void coinbase(std::vector<Out> outs) {
        Transaction tx;
        TxInput in;
        in.prev_vout = blockparse::kCoinbaseVout;
        // Unique per block so no two coinbases share a txid.
        in.script_sig = {0x03, static_cast<std::uint8_t>(coinbase_serial_ & 0xff),
                         static_cast<std::uint8_t>((coinbase_serial_ >> 8) & 0xff), 0x2f};
        ++coinbase_serial_;
        tx.inputs.push_back(std::move(in));
        for (const auto& o : outs) tx.outputs.push_back({o.value, o.script});
        commit(std::move(tx), outs);
    }

    void seal_block(std::int64_t time) {
        Block block;
        block.header.version = 2;
        block.header.time = static_cast<std::uint32_t>(time);
        block.header.bits = 0x1d00ffff;
        block.header.nonce = static_cast<std::uint32_t>(blocks_.size());
        block.txs = std::move(pending_);
        pending_.clear();
        blocks_.push_back(std::move(block));
    }

    std::vector<Block> finish() { return std::move(blocks_); }

    std::uint64_t rand(std::uint64_t bound) { return rng_() % bound; }

private:
    void commit(Transaction tx, const std::vector<Out>& outs) {
        auto bytes = blockparse::serialize_tx(tx);
        tx.txid = double_sha256(bytes);
        for (std::uint32_t v = 0; v < outs.size(); ++v) {
            if (outs[v].wallet_key.empty()) continue;
            wallet_[outs[v].wallet_key].push_back({tx.txid, v, outs[v].value});
        }
        pending_.push_back(std::move(tx));
    }

    std::mt19937_64 rng_;
    std::map<std::string, std::deque<Utxo>> wallet_;
    std::vector<Transaction> pending_;
    std::vector<Block> blocks_;
    std::uint32_t coinbase_serial_ = 0;
};

std::string join_lines(std::initializer_list<std::string> lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

}  // namespace

DemoWorld make_demo_world(std::uint64_t seed) {
    DemoWorld world;
    WorldBuilder b(seed);

    const std::int64_t oct20 = util::epoch_from_civil(2013, 10, 20);
    const std::int64_t day = 86400;
    world.seizure_day = oct20 + 5 * day;  // 2013-10-25
    world.seizure_count = 445;
    world.seizure_value = 324 * kCoin;

    world.fbi_address = "1FfmbHfnpaZjKFvyi1okTjJJusN455paPH";
    world.dice_address = "1dice8EMZmqKvrGE4Qc9bUFf9PX3xaYDp";
    world.faucet_address = addr_for("faucet");
    for (int i = 0; i < 8; ++i) world.sr_addresses.push_back(addr_for("sr" + std::to_string(i)));
    world.sr_entity = *std::min_element(world.sr_addresses.begin(), world.sr_addresses.end());
    world.voodah_addresses = {addr_for("voodah0"), addr_for("voodah1")};
    world.voodah_entity =
        std::min(world.voodah_addresses[0], world.voodah_addresses[1]);
    world.broker_addresses = {addr_for("broker0"), addr_for("broker1")};
    for (int i = 0; i < 30; ++i) world.user_addresses.push_back(addr_for("user" + std::to_string(i)));
    const std::string trader_b = addr_for("trader_second");

    std::array<std::uint8_t, 33> dice_pubkey{};
    dice_pubkey[0] = 0x02;
    Digest256 key_body = sha256(as_bytes("dice-change-key"));
    std::copy_n(key_body.begin(), 32, dice_pubkey.begin() + 1);
    world.dice_key_address = addrcodec::encode(0x00, hash160(dice_pubkey));

    const auto& sr = world.sr_addresses;
    const auto& u = world.user_addresses;
    const std::string& v0 = world.voodah_addresses[0];
    const std::string& v1 = world.voodah_addresses[1];
    const std::string& b0 = world.broker_addresses[0];
    const std::string& b1 = world.broker_addresses[1];

    // Day 1 and 2 (Oct 20-21): mining funds the marketplace treasury with
    // 445 equal outputs, plus small outputs that the consolidations below
    // will co-spend, the faucet float, and the forum user's own rewards.
    int sr_rotate = 0;
    {
        std::vector<Out> outs;
        for (int i = 0; i < 150; ++i) outs.push_back(b.pay(sr[sr_rotate++ % 8], world.seizure_value));
        outs.push_back(b.pay(world.faucet_address, 100000 * kCoin));
        b.coinbase(std::move(outs));
        b.seal_block(oct20 + 600);
    }
    {
        std::vector<Out> outs;
        for (int i = 0; i < 150; ++i) outs.push_back(b.pay(sr[sr_rotate++ % 8], world.seizure_value));
        b.coinbase(std::move(outs));
        b.seal_block(oct20 + 43200);
    }
    {
        std::vector<Out> outs;
        for (int i = 0; i < 145; ++i) outs.push_back(b.pay(sr[sr_rotate++ % 8], world.seizure_value));
        // Consolidation fodder, laid out to match the chain below.
        const int fodder[] = {0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7};
        for (int k : fodder) outs.push_back(b.pay(sr[k], 10 * kCoin));
        outs.push_back(b.pay(v0, 50 * kCoin));
        outs.push_back(b.pay(v1, 50 * kCoin));
        b.coinbase(std::move(outs));
        b.seal_block(oct20 + day + 600);
    }

    // Day 3 (Oct 22): the treasury tidies its small outputs in a chain of
    // two-input sweeps, tying all eight addresses into one entity. The
    // faucet then fans out spending money to the background users.
    {
        b.coinbase({b.pay(addr_for("miner3"), 25 * kCoin)});
        for (int i = 0; i < 7; ++i) {
            b.spend({b.take(sr[i], 10 * kCoin), b.take(sr[i + 1], 10 * kCoin)},
                    {b.pay(sr[0], 20 * kCoin)}, sr[0]);
        }
        std::vector<Out> fan;
        for (int i = 0; i < 30; ++i) fan.push_back(b.pay(u[i], 50 * kCoin));
        fan.push_back(b.pay(trader_b, 50 * kCoin));
        fan.push_back(b.pay(b1, 50 * kCoin));
        b.spend({b.take(world.faucet_address)}, std::move(fan), world.faucet_address);
        b.seal_block(oct20 + 2 * day + 600);
    }

    // Day 4 (Oct 23), two blocks: betting traffic to the gambling hub, the
    // forum user's single outbound payment, and person-to-person noise.
    {
        b.coinbase({b.pay(addr_for("miner4a"), 25 * kCoin)});
        for (int i = 0; i < 55; ++i) {
            const std::string& player = u[i % 30];
            std::int64_t bet = (100 + static_cast<std::int64_t>(b.rand(150))) * kCoin / 100;
            b.spend({b.take(player)}, {b.pay(world.dice_address, bet)}, player);
        }
        // The forum user's only spend: both reward outputs together, paying
        // the broker. Change returns home, so the user's graph neighborhood
        // stays exactly {broker}.
        b.spend({b.take(v0), b.take(v1)}, {b.pay(b0, 80 * kCoin)}, v0);
        b.seal_block(oct20 + 3 * day + 600);
    }
    {
        b.coinbase({b.pay(addr_for("miner4b"), 25 * kCoin)});
        for (int i = 55; i < 110; ++i) {
            const std::string& player = u[i % 30];
            std::int64_t bet = (100 + static_cast<std::int64_t>(b.rand(150))) * kCoin / 100;
            b.spend({b.take(player)}, {b.pay(world.dice_address, bet)}, player);
        }
        // The trader co-spends both of their addresses: one more entity.
        b.spend({b.take(u[3]), b.take(trader_b)}, {b.pay(u[9], 30 * kCoin)}, u[3]);
        for (int k = 0; k < 15; ++k) {
            int a = (k * 7) % 20;
            int c = (k * 11 + 3) % 20;
            if (a == c) c = (c + 1) % 20;
            std::int64_t amount = (100 + static_cast<std::int64_t>(b.rand(400))) * kCoin / 100;
            b.spend({b.take(u[a])}, {b.pay(u[c], amount)}, u[a]);
        }
        // A data-carrier output, so non-standard scripts appear downstream.
        b.spend({b.take(u[17])}, {b.burn({0x6a, 0x02, 0xca, 0xfe}, kCoin / 1000)}, u[17]);
        b.seal_block(oct20 + 3 * day + 43200);
    }

    // Day 5 (Oct 24): the hub pays winners from the bets it holds, with its
    // change parked on a raw public key; the broker forwards to the
    // marketplace; ten users make deposits of their own.
    {
        b.coinbase({b.pay(addr_for("miner5"), 25 * kCoin)});
        std::vector<Utxo> pot;
        for (int i = 0; i < 60; ++i) pot.push_back(b.take(world.dice_address));
        std::int64_t pot_sum = 0;
        for (const auto& x : pot) pot_sum += x.value;
        std::vector<Out> winners;
        std::int64_t paid = 0;
        for (int i = 0; i < 30; ++i) {
            std::int64_t w = (30 + static_cast<std::int64_t>(b.rand(120))) * kCoin / 100;
            winners.push_back(b.pay(u[i], w));
            paid += w;
        }
        winners.push_back(b.pay_pubkey(dice_pubkey, world.dice_key_address, pot_sum - paid));
        b.spend(std::move(pot), std::move(winners), world.dice_address);

        b.spend({b.take(b0), b.take(b1)}, {b.pay(sr[3], 120 * kCoin)}, b0);

        for (int k = 0; k < 10; ++k) {
            std::int64_t deposit = (5 + k) * kCoin;
            b.spend({b.take(u[20 + k])}, {b.pay(sr[3], deposit)}, u[20 + k]);
        }
        b.seal_block(oct20 + 4 * day + 600);
    }

    // Day 6 (Oct 25): the seizure. Every treasury output of the signature
    // value moves to the collection address, one transaction each, zero fee.
    // The hub also runs a second payout that co-spends its pubkey-held
    // change with held bets, tying both hub identities together.
    {
        b.coinbase({b.pay(addr_for("miner6"), 25 * kCoin)});
        for (std::size_t i = 0; i < world.seizure_count; ++i) {
            b.spend({b.take(sr[i % 8], world.seizure_value)},
                    {b.pay(world.fbi_address, world.seizure_value)}, world.fbi_address);
        }
        std::vector<Utxo> pot;
        pot.push_back(b.take(world.dice_key_address));
        while (b.utxo_count(world.dice_address) > 0) pot.push_back(b.take(world.dice_address));
        std::int64_t pot_sum = 0;
        for (const auto& x : pot) pot_sum += x.value;
        std::vector<Out> winners;
        std::int64_t paid = 0;
        for (int i = 0; i < 30; ++i) {
            std::int64_t w = (20 + static_cast<std::int64_t>(b.rand(80))) * kCoin / 100;
            winners.push_back(b.pay(u[i], w));
            paid += w;
        }
        if (paid >= pot_sum) throw std::logic_error("fixture hub overdrawn");
        b.spend(std::move(pot), std::move(winners), world.dice_address);
        b.seal_block(world.seizure_day + 600);
    }

    // Day 7 (Oct 26): a quiet tail so time windows have an after.
    {
        b.coinbase({b.pay(addr_for("miner7"), 25 * kCoin)});
        for (int k = 0; k < 5; ++k) {
            int a = (k * 3 + 1) % 20;
            int c = (k * 5 + 7) % 20;
            if (a == c) c = (c + 1) % 20;
            std::int64_t amount = (100 + static_cast<std::int64_t>(b.rand(200))) * kCoin / 100;
            b.spend({b.take(u[a])}, {b.pay(u[c], amount)}, u[a]);
        }
        b.seal_block(oct20 + 6 * day + 600);
    }

    world.blocks = b.finish();

    world.rates_csv =
        "date,usd_per_btc\n"
        "2013-10-18,157.1\n"
        "2013-10-19,160.3\n"
        "2013-10-20,166.9\n"
        "2013-10-21,170.4\n"
        "2013-10-22,175.0\n"
        "2013-10-23,178.2\n"
        "2013-10-24,180.6\n"
        "2013-10-25,183.9\n"
        "2013-10-26,187.5\n"
        "2013-10-27,188.2\n";

    // Forum corpus: five identities signing seven addresses, plus decoy
    // pages whose address-shaped strings fail the checksum.
    world.corpus.emplace_back(
        "01_voodah_intro.txt",
        join_lines({"Author: voodah",
                    "Been mining since spring. If any of my old trades shorted you,",
                    "ping me here. Payouts come from " + v0 + " and sometimes",
                    v1 + " when the first wallet is cold.",
                    "", "-- voodah"}));
    world.corpus.emplace_back(
        "02_trader_thread.html",
        "<html><body>\n"
        "<div class=\"poster_info\"><a href=\"/u/trader_tom\">trader_tom</a></div>\n"
        "<div class=\"post\">WTS 30 coins, escrow accepted. Send to " + u[3] +
            " or my backup " + trader_b + ".</div>\n"
            "</body></html>\n");
    world.corpus.emplace_back(
        "03_gary_bets.txt",
        join_lines({"Author: Gambler_Gary",
                    "Turned 2 coins into 11 last night, proof tx on request.",
                    "Tips: " + u[7],
                    "(the dice house address " + corrupt(world.dice_address) +
                        " -- typo'd so you don't fat-finger it)"}));
    world.corpus.emplace_back(
        "04_collection.html",
        "<html><body>\n"
        "<div class=\"poster_info\"><a href=\"/u/collector_carl\">collector_carl</a></div>\n"
        "<div class=\"post\">Cataloguing interesting coins. Donations: " + u[12] +
            "</div>\n</body></html>\n");
    world.corpus.emplace_back(
        "05_hodler.txt",
        join_lines({"Author: hodler_hank", "Not selling. Cold storage only:",
                    u[15]}));
    world.corpus.emplace_back(
        "06_seizure_news.txt",
        join_lines({"BREAKING: agents moved roughly 144k coins today.",
                    "Rumored collection address " + corrupt(world.fbi_address) +
                        " (unverified, checksum does not even pass).",
                    "Nothing in this wire story is signed."}));
    world.corpus.emplace_back(
        "07_donations.html",
        "<html><body><div class=\"post\">Mirror of a leaked donations page: " +
            corrupt("1HB5XMLmzFVj8ALj6mfBsbifRoD4miY36v") +
            " (dead link, do not use)</div></body></html>\n");
    std::sort(world.corpus.begin(), world.corpus.end());

    world.planted_pairs = {
        {"voodah", v0},        {"voodah", v1},         {"trader_tom", u[3]},
        {"trader_tom", trader_b}, {"Gambler_Gary", u[7]}, {"collector_carl", u[12]},
        {"hodler_hank", u[15]},
    };
    std::sort(world.planted_pairs.begin(), world.planted_pairs.end());

    return world;
}

void write_demo_inputs(const std::string& dir, const DemoWorld& world) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "blocks");
    fs::create_directories(fs::path(dir) / "corpus");

    // Two block files so directory ordering is exercised.
    std::size_t half = world.blocks.size() / 2;
    std::vector<Block> first(world.blocks.begin(), world.blocks.begin() + half);
    std::vector<Block> second(world.blocks.begin() + half, world.blocks.end());
    auto bytes0 = blockparse::serialize_block_file(first);
    auto bytes1 = blockparse::serialize_block_file(second);
    util::write_file(fs::path(dir) / "blocks" / "blk00000.dat",
                     std::string_view(reinterpret_cast<const char*>(bytes0.data()), bytes0.size()));
    util::write_file(fs::path(dir) / "blocks" / "blk00001.dat",
                     std::string_view(reinterpret_cast<const char*>(bytes1.data()), bytes1.size()));

    util::write_file(fs::path(dir) / "rates.csv", world.rates_csv);
    for (const auto& [name, content] : world.corpus) {
        util::write_file(fs::path(dir) / "corpus" / name, content);
    }
}

}  // namespace chaintrace::fixture
