#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "chaintrace/addrcodec.hpp"
#include "chaintrace/blockparse.hpp"
#include "chaintrace/util.hpp"
#include "fixture_hex.hpp"
#include "testutil.hpp"

using namespace chaintrace;
using namespace chaintrace::blockparse;

namespace {

std::vector<std::uint8_t> hex(std::string_view s) { return util::from_hex(s); }

ByteReader reader_of(const std::vector<std::uint8_t>& v) { return ByteReader(std::span(v)); }

}  // namespace

TEST_CASE("varint encodes the four width classes exactly") {
    CHECK(util::to_hex(encode_varint(0)) == "00");
    CHECK(util::to_hex(encode_varint(5)) == "05");
    CHECK(util::to_hex(encode_varint(0xfc)) == "fc");
    CHECK(util::to_hex(encode_varint(0xfd)) == "fdfd00");
    CHECK(util::to_hex(encode_varint(256)) == "fd0001");
    CHECK(util::to_hex(encode_varint(65535)) == "fdffff");
    CHECK(util::to_hex(encode_varint(65536)) == "fe00000100");
    CHECK(util::to_hex(encode_varint(0xffffffffull)) == "feffffffff");
    CHECK(util::to_hex(encode_varint(0x100000000ull)) == "ff0000000001000000");
}

TEST_CASE("varint decodes and reports consumed width") {
    struct Row {
        std::string_view bytes_hex;
        std::uint64_t value;
        std::size_t consumed;
    };
    const Row rows[] = {
        {"05", 5, 1},          {"fd0001", 256, 3},         {"fdffff", 65535, 3},
        {"fe00000100", 65536, 5}, {"ff0000000001000000", 0x100000000ull, 9},
    };
    for (const auto& row : rows) {
        auto bytes = hex(row.bytes_hex);
        auto r = reader_of(bytes);
        CHECK(read_varint(r) == row.value);
        CHECK(r.pos() == row.consumed);
    }
}

TEST_CASE("varint truncation raises") {
    auto just_tag = hex("fd");
    auto r1 = reader_of(just_tag);
    CHECK_THROWS_AS((void)read_varint(r1), ParseError);

    auto half_u32 = hex("fe0000");
    auto r2 = reader_of(half_u32);
    CHECK_THROWS_AS((void)read_varint(r2), ParseError);

    std::vector<std::uint8_t> empty;
    auto r3 = reader_of(empty);
    CHECK_THROWS_AS((void)read_varint(r3), ParseError);
}

TEST_CASE("varint round-trips random values") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        int shift = static_cast<int>(rng() % 64);
        std::uint64_t v = rng() >> shift;
        auto enc = encode_varint(v);
        ByteReader r{std::span(enc)};
        CHECK(read_varint(r) == v);
        CHECK(r.done());
    }
}

TEST_CASE("fixture txids match independently computed double-SHA-256") {
    // Expected values were produced outside this codebase by hashing the raw
    // hex with a stand-alone double-SHA-256 and reversing the digest.
    struct Row {
        std::string tx_hex;
        std::string txid;
    };
    const Row rows[] = {
        {fixture_hex::kTx1Hex, fixture_hex::kTx1Id},
        {fixture_hex::kTx2Hex, fixture_hex::kTx2Id},
        {fixture_hex::kTx3Hex, fixture_hex::kTx3Id},
    };
    for (const auto& row : rows) {
        auto bytes = hex(row.tx_hex);
        ByteReader r{std::span(bytes)};
        auto tx = parse_tx(r);
        CHECK(r.done());
        CHECK(tx.txid_hex() == row.txid);
        // The library serializer must reproduce the input bytes.
        CHECK(util::to_hex(serialize_tx(tx)) == row.tx_hex);
    }
}

TEST_CASE("coinbase detection requires both null txid and max vout") {
    auto bytes = hex(fixture_hex::kTx1Hex);
    ByteReader r{std::span(bytes)};
    auto tx = parse_tx(r);
    CHECK(tx.is_coinbase());

    Transaction not_cb = tx;
    not_cb.inputs[0].prev_vout = 0;
    CHECK_FALSE(not_cb.is_coinbase());

    Transaction not_cb2 = tx;
    not_cb2.inputs[0].prev_txid[5] = 0x01;
    CHECK_FALSE(not_cb2.is_coinbase());
}

TEST_CASE("round-trip against the test-owned serializer on 100 random blocks") {
    std::mt19937_64 rng(20130425);
    for (int i = 0; i < 100; ++i) {
        std::vector<Block> blocks;
        std::size_t n = 1 + rng() % 3;
        for (std::size_t b = 0; b < n; ++b) blocks.push_back(testutil::random_block(rng));

        auto stream = testutil::ref_serialize_block_file(blocks);
        auto parsed = parse_block_stream(std::span(stream));
        REQUIRE(parsed.size() == blocks.size());
        CHECK(parsed == blocks);

        // And the library serializer must agree byte for byte.
        CHECK(serialize_block_file(parsed) == stream);
    }
}

TEST_CASE("empty stream parses to no blocks") {
    std::vector<std::uint8_t> empty;
    CHECK(parse_block_stream(std::span(empty)).empty());
}

TEST_CASE("trailing zero padding is tolerated") {
    std::mt19937_64 rng(7);
    std::vector<Block> blocks = {testutil::random_block(rng)};
    auto stream = testutil::ref_serialize_block_file(blocks);
    stream.insert(stream.end(), 128, 0x00);
    auto parsed = parse_block_stream(std::span(stream));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == blocks[0]);
}

TEST_CASE("bad magic reports the offset") {
    auto stream = hex("deadbeef00000000");
    try {
        parse_block_stream(std::span(stream));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("bad magic") != std::string::npos);
        CHECK(msg.find("offset 0") != std::string::npos);
    }
}

TEST_CASE("truncated and length-mismatched blocks raise") {
    std::mt19937_64 rng(9);
    std::vector<Block> blocks = {testutil::random_block(rng)};
    auto stream = testutil::ref_serialize_block_file(blocks);

    auto truncated = stream;
    truncated.resize(truncated.size() - 5);
    CHECK_THROWS_AS((void)parse_block_stream(std::span(truncated)), ParseError);

    // Declared length one byte longer than the actual payload.
    auto skewed = stream;
    skewed[4] = static_cast<std::uint8_t>(skewed[4] + 1);
    skewed.push_back(0x77);  // keep the buffer long enough
    CHECK_THROWS_AS((void)parse_block_stream(std::span(skewed)), ParseError);
}

TEST_CASE("pinned single-block stream parses to known content") {
    auto stream = hex(fixture_hex::kBlockStreamHex);
    auto blocks = parse_block_stream(std::span(stream));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].header.time == 1382659200);
    CHECK(blocks[0].header.version == 2);
    REQUIRE(blocks[0].txs.size() == 2);
    CHECK(blocks[0].txs[0].is_coinbase());
    CHECK(blocks[0].txs[1].inputs.size() == 1);
}

// --- resolve ---------------------------------------------------------------

namespace {

Digest256 txid_of(const Transaction& tx) {
    auto bytes = serialize_tx(tx);
    return double_sha256(std::span(bytes.data(), bytes.size()));
}

Transaction make_coinbase(std::uint8_t tag, std::int64_t value,
                          const std::vector<std::uint8_t>& spk) {
    Transaction tx;
    TxInput in;
    in.prev_vout = kCoinbaseVout;
    in.script_sig = {0x04, tag};
    tx.inputs.push_back(in);
    tx.outputs.push_back({value, spk});
    return tx;
}

Transaction make_spend(const Transaction& prev, std::vector<std::uint32_t> vouts,
                       std::vector<std::pair<std::int64_t, std::vector<std::uint8_t>>> outs) {
    Transaction tx;
    Digest256 prev_id = txid_of(prev);
    for (auto vout : vouts) {
        TxInput in;
        in.prev_txid = prev_id;
        in.prev_vout = vout;
        in.script_sig = {0x01, 0x00};
        tx.inputs.push_back(in);
    }
    for (auto& [value, spk] : outs) tx.outputs.push_back({value, spk});
    return tx;
}

Block block_of(std::uint32_t time, std::vector<Transaction> txs) {
    Block blk;
    blk.header.version = 2;
    blk.header.time = time;
    blk.header.bits = 0x1d00ffff;
    blk.txs = std::move(txs);
    // Stamp txids the way parsing would.
    for (auto& tx : blk.txs) tx.txid = txid_of(tx);
    return blk;
}

}  // namespace

TEST_CASE("resolve handles the two-tx coinbase chain") {
    auto spk_a = testutil::p2pkh_script(0x11);
    auto spk_b = testutil::p2pkh_script(0x22);
    auto cb = make_coinbase(1, 5000000000, spk_a);
    auto spend = make_spend(cb, {0}, {{5000000000, spk_b}});

    auto res = resolve({block_of(1382659200, {cb, spend})});
    REQUIRE(res.records.size() == 2);

    const auto& r0 = res.records[0];
    CHECK(r0.coinbase);
    REQUIRE(r0.in.size() == 1);
    CHECK(r0.in[0].first == "coinbase");
    CHECK(r0.in[0].second == 5000000000);
    CHECK(r0.out[0].first == "12ZEw5Hcv1hTb6YUQJ69y1V7uhcoDz92PH");

    const auto& r1 = res.records[1];
    CHECK_FALSE(r1.coinbase);
    REQUIRE(r1.in.size() == 1);
    CHECK(r1.in[0].first == "12ZEw5Hcv1hTb6YUQJ69y1V7uhcoDz92PH");
    CHECK(r1.in[0].second == 5000000000);
    CHECK(r1.out[0].first == "147Us9aEq2PvBC5wobBJw1yEpQEbPKzssA");

    // Only the spend's output remains unspent.
    REQUIRE(res.utxo.size() == 1);
    CHECK(res.utxo.begin()->second.address == "147Us9aEq2PvBC5wobBJw1yEpQEbPKzssA");
}

TEST_CASE("resolve rejects spends of unknown outputs, naming the outpoint") {
    Transaction tx;
    TxInput in;
    in.prev_txid.fill(0xaa);
    in.prev_vout = 3;
    tx.inputs.push_back(in);
    tx.outputs.push_back({100, testutil::p2pkh_script(0x11)});

    try {
        resolve({block_of(1382659200, {tx})});
        FAIL("expected ResolveError");
    } catch (const ResolveError& e) {
        std::string msg = e.what();
        CHECK(msg.find("unknown output") != std::string::npos);
        CHECK(msg.find(std::string(64, 'a')) != std::string::npos);
        CHECK(msg.find(":3") != std::string::npos);
    }
}

TEST_CASE("resolve rejects double-spends") {
    auto spk = testutil::p2pkh_script(0x11);
    auto cb = make_coinbase(2, 5000000000, spk);
    auto s1 = make_spend(cb, {0}, {{5000000000, testutil::p2pkh_script(0x22)}});
    auto s2 = make_spend(cb, {0}, {{4000000000, testutil::p2pkh_script(0x33)}});
    CHECK_THROWS_AS((void)resolve({block_of(1382659200, {cb, s1, s2})}), ResolveError);
}

TEST_CASE("resolve rejects value creation") {
    auto cb = make_coinbase(3, 1000, testutil::p2pkh_script(0x11));
    auto bad = make_spend(cb, {0}, {{2000, testutil::p2pkh_script(0x22)}});
    CHECK_THROWS_AS((void)resolve({block_of(1382659200, {cb, bad})}), ResolveError);
}

TEST_CASE("resolve matches a hand-built table on a 10-tx chain") {
    // Layout: two coinbases fund A and B; A fans out to C and D; C and D are
    // merged into E; E pays F with a fee; B pays G; G pays H and change to G;
    // the change is spent to I; a nonstandard output goes to a script label.
    auto A = testutil::p2pkh_script(0xa1);
    auto B = testutil::p2pkh_script(0xb2);
    auto C = testutil::p2pkh_script(0xc3);
    auto D = testutil::p2pkh_script(0xd4);
    auto E = testutil::p2pkh_script(0xe5);
    auto F = testutil::p2pkh_script(0xf6);
    auto G = testutil::p2pkh_script(0x17);
    auto H = testutil::p2pkh_script(0x28);
    auto I = testutil::p2pkh_script(0x39);
    std::vector<std::uint8_t> weird = {0x51};  // OP_TRUE

    auto addr = [](const std::vector<std::uint8_t>& spk) {
        return chaintrace::addrcodec::classify_script(spk).node_id;
    };

    auto t1 = make_coinbase(10, 50'0000'0000, A);
    auto t2 = make_coinbase(11, 25'0000'0000, B);
    auto t3 = make_spend(t1, {0}, {{30'0000'0000, C}, {20'0000'0000, D}});
    auto t4 = make_spend(t3, {0}, {{30'0000'0000, E}});
    auto t5 = make_spend(t3, {1}, {{20'0000'0000, E}});
    // E holds two UTXOs now; spend both (two inputs from different txs).
    Transaction t6;
    {
        Digest256 id4 = txid_of(t4);
        Digest256 id5 = txid_of(t5);
        TxInput in1;
        in1.prev_txid = id4;
        in1.prev_vout = 0;
        TxInput in2;
        in2.prev_txid = id5;
        in2.prev_vout = 0;
        t6.inputs = {in1, in2};
        t6.outputs.push_back({49'0000'0000, F});  // 1 BTC fee
    }
    auto t7 = make_spend(t2, {0}, {{25'0000'0000, G}});
    auto t8 = make_spend(t7, {0}, {{10'0000'0000, H}, {14'0000'0000, G}});
    auto t9 = make_spend(t8, {1}, {{14'0000'0000, I}});
    auto t10 = make_spend(t9, {0}, {{13'0000'0000, weird}});

    auto blk1 = block_of(1382659200, {t1, t2, t3, t4, t5});
    auto blk2 = block_of(1382659300, {t6, t7, t8, t9, t10});
    auto res = resolve({blk1, blk2});
    REQUIRE(res.records.size() == 10);

    CHECK(res.records[0].in == std::vector<std::pair<std::string, std::int64_t>>{
                                   {"coinbase", 50'0000'0000}});
    CHECK(res.records[2].in ==
          std::vector<std::pair<std::string, std::int64_t>>{{addr(A), 50'0000'0000}});
    CHECK(res.records[2].out == std::vector<std::pair<std::string, std::int64_t>>{
                                    {addr(C), 30'0000'0000}, {addr(D), 20'0000'0000}});
    CHECK(res.records[5].in == std::vector<std::pair<std::string, std::int64_t>>{
                                   {addr(E), 30'0000'0000}, {addr(E), 20'0000'0000}});
    CHECK(res.records[5].out ==
          std::vector<std::pair<std::string, std::int64_t>>{{addr(F), 49'0000'0000}});
    CHECK(res.records[7].out == std::vector<std::pair<std::string, std::int64_t>>{
                                    {addr(H), 10'0000'0000}, {addr(G), 14'0000'0000}});
    CHECK(res.records[9].out[0].first == "script:da1745e9b549bd0bfa1a569971c77eba30cd5a4b");

    // UTXO oracle: brute-force set difference of all outputs minus all spends.
    std::set<std::pair<std::string, std::uint32_t>> expected_unspent;
    std::vector<Transaction> all = {t1, t2, t3, t4, t5, t6, t7, t8, t9, t10};
    for (auto& tx : all) tx.txid = txid_of(tx);
    for (const auto& tx : all) {
        for (std::size_t v = 0; v < tx.outputs.size(); ++v) {
            expected_unspent.insert({tx.txid_hex(), static_cast<std::uint32_t>(v)});
        }
    }
    for (const auto& tx : all) {
        if (tx.is_coinbase()) continue;
        for (const auto& in : tx.inputs) {
            auto hexid = chaintrace::util::to_hex_reversed(
                std::span(in.prev_txid.data(), in.prev_txid.size()));
            expected_unspent.erase({hexid, in.prev_vout});
        }
    }
    std::set<std::pair<std::string, std::uint32_t>> got_unspent;
    for (const auto& [op, entry] : res.utxo) {
        got_unspent.insert(
            {chaintrace::util::to_hex_reversed(std::span(op.txid.data(), op.txid.size())),
             op.vout});
    }
    CHECK(got_unspent == expected_unspent);
}

TEST_CASE("resolve output is deterministic") {
    std::mt19937_64 rng(55);
    auto cb1 = make_coinbase(21, 5000000000, testutil::p2pkh_script(0x11));
    auto cb2 = make_coinbase(22, 5000000000, testutil::p2pkh_script(0x22));
    auto s1 = make_spend(cb1, {0}, {{5000000000, testutil::p2pkh_script(0x33)}});
    std::vector<Block> blocks = {block_of(1382659200, {cb1, cb2, s1})};

    auto a = resolve(blocks);
    auto b = resolve(blocks);
    CHECK(a.records == b.records);

    std::string ja, jb;
    for (const auto& r : a.records) ja += record_to_json(r) + "\n";
    for (const auto& r : b.records) jb += record_to_json(r) + "\n";
    CHECK(ja == jb);
}

// --- records persistence ----------------------------------------------------

namespace {

TxRecord random_record(std::mt19937_64& rng) {
    static const char* addrs[] = {"1FfmbHfnpaZjKFvyi1okTjJJusN455paPH",
                                  "1dice8EMZmqKvrGE4Qc9bUFf9PX3xaYDp",
                                  "1HB5XMLmzFVj8ALj6mfBsbifRoD4miY36v",
                                  "script:da1745e9b549bd0bfa1a569971c77eba30cd5a4b", "coinbase"};
    TxRecord rec;
    std::string txid;
    for (int i = 0; i < 64; ++i) txid += "0123456789abcdef"[rng() % 16];
    rec.txid = txid;
    rec.time = 1350000000 + static_cast<std::int64_t>(rng() % 50000000);
    rec.coinbase = rng() % 5 == 0;
    std::size_t n_in = rec.coinbase ? 1 : 1 + rng() % 3;
    for (std::size_t i = 0; i < n_in; ++i) {
        rec.in.emplace_back(rec.coinbase ? "coinbase" : addrs[rng() % 4],
                            static_cast<std::int64_t>(rng() % 10000000000ull));
    }
    std::size_t n_out = rng() % 4;
    for (std::size_t i = 0; i < n_out; ++i) {
        rec.out.emplace_back(addrs[rng() % 4], static_cast<std::int64_t>(rng() % 10000000000ull));
    }
    return rec;
}

}  // namespace

TEST_CASE("records JSONL round-trips 1000 random records") {
    testutil::TmpDir tmp("records");
    std::mt19937_64 rng(77);
    std::vector<TxRecord> records;
    for (int i = 0; i < 1000; ++i) records.push_back(random_record(rng));

    auto path = tmp.file("records.jsonl");
    write_records(path, records);
    auto back = read_records(path);
    CHECK(back == records);
}

TEST_CASE("record JSON lines use the fixed field order") {
    TxRecord rec;
    rec.txid = std::string(64, 'a');
    rec.time = 1382659200;
    rec.coinbase = false;
    rec.in = {{"1FfmbHfnpaZjKFvyi1okTjJJusN455paPH", 123}};
    rec.out = {{"1HB5XMLmzFVj8ALj6mfBsbifRoD4miY36v", 100}, {"coinbase-ish", 23}};
    CHECK(record_to_json(rec) ==
          "{\"txid\":\"" + std::string(64, 'a') +
              "\",\"time\":1382659200,\"coinbase\":false,"
              "\"in\":[[\"1FfmbHfnpaZjKFvyi1okTjJJusN455paPH\",123]],"
              "\"out\":[[\"1HB5XMLmzFVj8ALj6mfBsbifRoD4miY36v\",100],[\"coinbase-ish\",23]]}");
}

TEST_CASE("read_records rejects bad lines with line numbers") {
    testutil::TmpDir tmp("badrecords");

    auto check_raises = [&](const std::string& content, const std::string& needle) {
        auto path = tmp.file("bad.jsonl");
        chaintrace::util::write_file(path, content);
        try {
            read_records(path);
            FAIL("expected ParseError for: " << content);
        } catch (const ParseError& e) {
            std::string msg = e.what();
            CAPTURE(content);
            CAPTURE(msg);
            CHECK(msg.find(needle) != std::string::npos);
        }
    };

    std::string good =
        "{\"txid\":\"" + std::string(64, 'b') + "\",\"time\":1,\"coinbase\":true,\"in\":[[\"coinbase\",5]],\"out\":[]}";

    check_raises("not json\n", "line 1");
    check_raises(good + "\n{\"txid\":12}\n", "line 2");
    // Negative value.
    check_raises("{\"txid\":\"" + std::string(64, 'c') +
                     "\",\"time\":1,\"coinbase\":false,\"in\":[[\"a\",-5]],\"out\":[]}\n",
                 "negative");
    // Bad txid.
    check_raises("{\"txid\":\"XYZ\",\"time\":1,\"coinbase\":false,\"in\":[],\"out\":[]}\n",
                 "txid");
}

TEST_CASE("read_records on an empty file yields nothing") {
    testutil::TmpDir tmp("emptyrecords");
    auto path = tmp.file("empty.jsonl");
    chaintrace::util::write_file(path, "");
    CHECK(read_records(path).empty());
}
