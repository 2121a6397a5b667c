#include "chaintrace/blockparse.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "chaintrace/addrcodec.hpp"
#include "chaintrace/util.hpp"

namespace chaintrace::blockparse {

namespace {

std::string at_offset(std::string_view what, std::size_t offset) {
    return std::string(what) + " at offset " + std::to_string(offset);
}

}  // namespace

void ByteReader::need(std::size_t n) const {
    if (remaining() < n) {
        throw ParseError(at_offset("truncated input: need " + std::to_string(n) + " bytes", pos_));
    }
}

std::uint8_t ByteReader::read_u8() {
    need(1);
    return data_[pos_++];
}

std::uint16_t ByteReader::read_u16le() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::read_u32le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::read_u64le() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    return v;
}

std::int64_t ByteReader::read_i64le() { return static_cast<std::int64_t>(read_u64le()); }

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::span<const std::uint8_t> ByteReader::window(std::size_t from, std::size_t to) const {
    return data_.subspan(from, to - from);
}

std::uint64_t read_varint(ByteReader& reader) {
    std::uint8_t tag = reader.read_u8();
    if (tag < 0xfd) return tag;
    if (tag == 0xfd) return reader.read_u16le();
    if (tag == 0xfe) return reader.read_u32le();
    return reader.read_u64le();
}

void append_varint(std::vector<std::uint8_t>& out, std::uint64_t value) {
    if (value < 0xfd) {
        out.push_back(static_cast<std::uint8_t>(value));
    } else if (value <= 0xffff) {
        out.push_back(0xfd);
        for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    } else if (value <= 0xffffffff) {
        out.push_back(0xfe);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    } else {
        out.push_back(0xff);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

std::vector<std::uint8_t> encode_varint(std::uint64_t value) {
    std::vector<std::uint8_t> out;
    append_varint(out, value);
    return out;
}

bool Transaction::is_coinbase() const {
    if (inputs.size() != 1) return false;
    const TxInput& in = inputs[0];
    if (in.prev_vout != kCoinbaseVout) return false;
    return std::all_of(in.prev_txid.begin(), in.prev_txid.end(),
                       [](std::uint8_t b) { return b == 0; });
}

std::string Transaction::txid_hex() const {
    return util::to_hex_reversed(std::span(txid.data(), txid.size()));
}

Transaction parse_tx(ByteReader& reader) {
    const std::size_t start = reader.pos();
    Transaction tx;
    tx.version = reader.read_u32le();

    std::uint64_t n_in = read_varint(reader);
    if (n_in == 0) throw ParseError(at_offset("transaction with zero inputs", start));
    tx.inputs.reserve(n_in);
    for (std::uint64_t i = 0; i < n_in; ++i) {
        TxInput in;
        auto id = reader.take(32);
        std::copy(id.begin(), id.end(), in.prev_txid.begin());
        in.prev_vout = reader.read_u32le();
        std::uint64_t script_len = read_varint(reader);
        auto script = reader.take(script_len);
        in.script_sig.assign(script.begin(), script.end());
        in.sequence = reader.read_u32le();
        tx.inputs.push_back(std::move(in));
    }

    std::uint64_t n_out = read_varint(reader);
    tx.outputs.reserve(n_out);
    for (std::uint64_t i = 0; i < n_out; ++i) {
        TxOutput out;
        out.value = reader.read_i64le();
        if (out.value < 0) throw ParseError(at_offset("negative output value", start));
        std::uint64_t script_len = read_varint(reader);
        auto script = reader.take(script_len);
        out.script_pubkey.assign(script.begin(), script.end());
        tx.outputs.push_back(std::move(out));
    }

    tx.locktime = reader.read_u32le();
    tx.txid = double_sha256(reader.window(start, reader.pos()));
    return tx;
}

namespace {

BlockHeader parse_header(ByteReader& reader) {
    BlockHeader h;
    h.version = reader.read_u32le();
    auto prev = reader.take(32);
    std::copy(prev.begin(), prev.end(), h.prev_hash.begin());
    auto merkle = reader.take(32);
    std::copy(merkle.begin(), merkle.end(), h.merkle_root.begin());
    h.time = reader.read_u32le();
    h.bits = reader.read_u32le();
    h.nonce = reader.read_u32le();
    return h;
}

}  // namespace

std::vector<Block> parse_block_stream(std::span<const std::uint8_t> stream) {
    std::vector<Block> blocks;
    ByteReader reader(stream);
    while (!reader.done()) {
        const std::size_t block_off = reader.pos();
        // Some exporters pad the tail of a file with zeros.
        if (stream[reader.pos()] == 0x00) {
            bool all_zero = true;
            for (std::size_t i = reader.pos(); i < stream.size(); ++i) {
                if (stream[i] != 0x00) {
                    all_zero = false;
                    break;
                }
            }
            if (all_zero) break;
        }
        auto magic = reader.take(4);
        if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
            throw ParseError(at_offset("bad magic", block_off));
        }
        std::uint32_t length = reader.read_u32le();
        const std::size_t payload_start = reader.pos();
        if (reader.remaining() < length) {
            throw ParseError(at_offset("truncated block: declared length " +
                                           std::to_string(length) + ", available " +
                                           std::to_string(reader.remaining()),
                                       block_off));
        }

        Block block;
        block.header = parse_header(reader);
        std::uint64_t tx_count = read_varint(reader);
        block.txs.reserve(tx_count);
        for (std::uint64_t i = 0; i < tx_count; ++i) block.txs.push_back(parse_tx(reader));

        const std::size_t consumed = reader.pos() - payload_start;
        if (consumed != length) {
            throw ParseError(at_offset("tx-count mismatch: declared length " +
                                           std::to_string(length) + ", parsed " +
                                           std::to_string(consumed),
                                       block_off));
        }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

std::vector<Block> parse_block_dir(const std::string& dir, std::size_t limit) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ParseError("not a directory: " + dir);

    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());

    std::vector<Block> blocks;
    for (const auto& path : paths) {
        std::string bytes = util::read_file(path);
        auto parsed = parse_block_stream(
            std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
        for (auto& block : parsed) {
            if (limit != 0 && blocks.size() >= limit) return blocks;
            blocks.push_back(std::move(block));
        }
    }
    return blocks;
}

namespace {

void append_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_i64le(std::vector<std::uint8_t>& out, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

}  // namespace

std::vector<std::uint8_t> serialize_tx(const Transaction& tx) {
    std::vector<std::uint8_t> out;
    append_u32le(out, tx.version);
    append_varint(out, tx.inputs.size());
    for (const auto& in : tx.inputs) {
        out.insert(out.end(), in.prev_txid.begin(), in.prev_txid.end());
        append_u32le(out, in.prev_vout);
        append_varint(out, in.script_sig.size());
        out.insert(out.end(), in.script_sig.begin(), in.script_sig.end());
        append_u32le(out, in.sequence);
    }
    append_varint(out, tx.outputs.size());
    for (const auto& o : tx.outputs) {
        append_i64le(out, o.value);
        append_varint(out, o.script_pubkey.size());
        out.insert(out.end(), o.script_pubkey.begin(), o.script_pubkey.end());
    }
    append_u32le(out, tx.locktime);
    return out;
}

std::vector<std::uint8_t> serialize_block(const Block& block) {
    std::vector<std::uint8_t> out;
    append_u32le(out, block.header.version);
    out.insert(out.end(), block.header.prev_hash.begin(), block.header.prev_hash.end());
    out.insert(out.end(), block.header.merkle_root.begin(), block.header.merkle_root.end());
    append_u32le(out, block.header.time);
    append_u32le(out, block.header.bits);
    append_u32le(out, block.header.nonce);
    append_varint(out, block.txs.size());
    for (const auto& tx : block.txs) {
        auto bytes = serialize_tx(tx);
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

std::vector<std::uint8_t> serialize_block_file(std::span<const Block> blocks) {
    std::vector<std::uint8_t> out;
    for (const auto& block : blocks) {
        auto payload = serialize_block(block);
        out.insert(out.end(), kMagic.begin(), kMagic.end());
        append_u32le(out, static_cast<std::uint32_t>(payload.size()));
        out.insert(out.end(), payload.begin(), payload.end());
    }
    return out;
}

ResolveResult resolve(const std::vector<Block>& blocks) {
    ResolveResult result;

    // Pass 1: index every output so spends may precede their funding tx
    // within the supplied stream.
    for (const auto& block : blocks) {
        for (const auto& tx : block.txs) {
            for (std::size_t vout = 0; vout < tx.outputs.size(); ++vout) {
                const auto& o = tx.outputs[vout];
                OutPoint op{tx.txid, static_cast<std::uint32_t>(vout)};
                auto cls = addrcodec::classify_script(o.script_pubkey);
                result.utxo[op] = UtxoEntry{std::move(cls.node_id), o.value};
            }
        }
    }

    // Pass 2: walk in block order, consuming funding entries.
    std::unordered_map<OutPoint, bool, OutPointHash> spent;
    for (const auto& block : blocks) {
        for (const auto& tx : block.txs) {
            TxRecord rec;
            rec.txid = tx.txid_hex();
            rec.time = static_cast<std::int64_t>(block.header.time);
            rec.coinbase = tx.is_coinbase();

            std::int64_t out_sum = 0;
            for (const auto& o : tx.outputs) {
                auto cls = addrcodec::classify_script(o.script_pubkey);
                rec.out.emplace_back(std::move(cls.node_id), o.value);
                out_sum += o.value;
            }

            if (rec.coinbase) {
                rec.in.emplace_back(std::string(kCoinbaseAddress), out_sum);
            } else {
                std::int64_t in_sum = 0;
                for (const auto& in : tx.inputs) {
                    OutPoint op{in.prev_txid, in.prev_vout};
                    auto label = util::to_hex_reversed(std::span(op.txid.data(), op.txid.size())) +
                                 ":" + std::to_string(op.vout);
                    if (spent.count(op)) {
                        throw ResolveError("double-spend of " + label + " in tx " + rec.txid);
                    }
                    auto it = result.utxo.find(op);
                    if (it == result.utxo.end()) {
                        throw ResolveError("spend of unknown output " + label + " in tx " +
                                           rec.txid);
                    }
                    rec.in.emplace_back(it->second.address, it->second.value);
                    in_sum += it->second.value;
                    spent[op] = true;
                    result.utxo.erase(it);
                }
                if (in_sum < out_sum) {
                    throw ResolveError("tx " + rec.txid + " creates value: inputs " +
                                       std::to_string(in_sum) + " < outputs " +
                                       std::to_string(out_sum));
                }
            }
            result.records.push_back(std::move(rec));
        }
    }
    return result;
}

namespace {

void append_json_string(std::string& out, std::string_view s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void append_pairs(std::string& out, const std::vector<std::pair<std::string, std::int64_t>>& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += "[";
        append_json_string(out, v[i].first);
        out += ',';
        out += std::to_string(v[i].second);
        out += ']';
    }
    out += ']';
}

}  // namespace

std::string record_to_json(const TxRecord& record) {
    std::string out;
    out += "{\"txid\":";
    append_json_string(out, record.txid);
    out += ",\"time\":";
    out += std::to_string(record.time);
    out += ",\"coinbase\":";
    out += record.coinbase ? "true" : "false";
    out += ",\"in\":";
    append_pairs(out, record.in);
    out += ",\"out\":";
    append_pairs(out, record.out);
    out += '}';
    return out;
}

void write_records(const std::string& path, std::span<const TxRecord> records) {
    std::string out;
    for (const auto& rec : records) {
        out += record_to_json(rec);
        out += '\n';
    }
    util::write_file(path, out);
}

namespace {

bool is_hex64(const std::string& s) {
    if (s.size() != 64) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

std::vector<std::pair<std::string, std::int64_t>> parse_pairs(const nlohmann::json& arr,
                                                              const char* field) {
    if (!arr.is_array()) throw ParseError(std::string(field) + " is not an array");
    std::vector<std::pair<std::string, std::int64_t>> out;
    out.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_string() ||
            !item[1].is_number_integer()) {
            throw ParseError(std::string(field) + " entries must be [address, satoshi] pairs");
        }
        std::string addr = item[0].get<std::string>();
        std::int64_t value = item[1].get<std::int64_t>();
        if (addr.empty()) throw ParseError(std::string(field) + " has an empty address");
        if (value < 0) throw ParseError(std::string(field) + " has a negative value");
        out.emplace_back(std::move(addr), value);
    }
    return out;
}

}  // namespace

std::vector<TxRecord> read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<TxRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            if (!j.is_object()) throw ParseError("not a JSON object");
            for (const char* key : {"txid", "time", "coinbase", "in", "out"}) {
                if (!j.contains(key)) throw ParseError(std::string("missing field ") + key);
            }
            TxRecord rec;
            if (!j["txid"].is_string()) throw ParseError("txid is not a string");
            rec.txid = j["txid"].get<std::string>();
            if (!is_hex64(rec.txid)) throw ParseError("txid is not 64 lowercase hex chars");
            if (!j["time"].is_number_integer()) throw ParseError("time is not an integer");
            rec.time = j["time"].get<std::int64_t>();
            if (!j["coinbase"].is_boolean()) throw ParseError("coinbase is not a bool");
            rec.coinbase = j["coinbase"].get<bool>();
            rec.in = parse_pairs(j["in"], "in");
            rec.out = parse_pairs(j["out"], "out");
            records.push_back(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace chaintrace::blockparse
