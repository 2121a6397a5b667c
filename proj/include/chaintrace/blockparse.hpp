#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chaintrace/hash.hpp"

namespace chaintrace::blockparse {

/// Structural failure in raw block/tx/record input.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Semantic failure while resolving spends through the UTXO index.
class ResolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bounds-checked cursor over an immutable byte buffer. All reads throw
/// ParseError instead of walking past the end.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

    std::uint8_t read_u8();
    std::uint16_t read_u16le();
    std::uint32_t read_u32le();
    std::uint64_t read_u64le();
    std::int64_t read_i64le();
    std::span<const std::uint8_t> take(std::size_t n);

    /// View of an already-consumed range, for hashing exactly what was parsed.
    std::span<const std::uint8_t> window(std::size_t from, std::size_t to) const;

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Protocol compact-size integer: 1, 3, 5 or 9 bytes.
std::uint64_t read_varint(ByteReader& reader);
void append_varint(std::vector<std::uint8_t>& out, std::uint64_t value);
std::vector<std::uint8_t> encode_varint(std::uint64_t value);

inline constexpr std::array<std::uint8_t, 4> kMagic = {0xf9, 0xbe, 0xb4, 0xd9};
inline constexpr std::uint32_t kCoinbaseVout = 0xffffffff;

struct TxInput {
    std::array<std::uint8_t, 32> prev_txid{};
    std::uint32_t prev_vout = 0;
    std::vector<std::uint8_t> script_sig;
    std::uint32_t sequence = 0xffffffff;

    bool operator==(const TxInput&) const = default;
};

struct TxOutput {
    std::int64_t value = 0;
    std::vector<std::uint8_t> script_pubkey;

    bool operator==(const TxOutput&) const = default;
};

struct Transaction {
    std::uint32_t version = 1;
    std::vector<TxInput> inputs;
    std::vector<TxOutput> outputs;
    std::uint32_t locktime = 0;
    /// Double-SHA-256 of the serialized tx, internal byte order. Derived
    /// during parsing; excluded from equality.
    Digest256 txid{};

    bool is_coinbase() const;
    /// Display form: byte-reversed hex, the convention block explorers use.
    std::string txid_hex() const;

    bool operator==(const Transaction& other) const {
        return version == other.version && inputs == other.inputs &&
               outputs == other.outputs && locktime == other.locktime;
    }
};

struct BlockHeader {
    std::uint32_t version = 1;
    Digest256 prev_hash{};
    Digest256 merkle_root{};
    std::uint32_t time = 0;
    std::uint32_t bits = 0;
    std::uint32_t nonce = 0;

    bool operator==(const BlockHeader&) const = default;
};

struct Block {
    BlockHeader header;
    std::vector<Transaction> txs;

    bool operator==(const Block&) const = default;
};

/// Parses one transaction and stamps its txid from the consumed bytes.
Transaction parse_tx(ByteReader& reader);

/// Parses a stream of magic-delimited blocks. Tolerates trailing zero
/// padding; anything else out of place is a ParseError with the offset.
std::vector<Block> parse_block_stream(std::span<const std::uint8_t> stream);

/// Reads every regular file in the directory in sorted name order and
/// concatenates their block sequences. limit == 0 means no cap.
std::vector<Block> parse_block_dir(const std::string& dir, std::size_t limit = 0);

std::vector<std::uint8_t> serialize_tx(const Transaction& tx);
/// Header + tx count + txs, without the file framing.
std::vector<std::uint8_t> serialize_block(const Block& block);
/// Full on-disk framing: magic, little-endian length, payload, per block.
std::vector<std::uint8_t> serialize_block_file(std::span<const Block> blocks);

/// Normalized view of one transaction: addresses and satoshi values only.
struct TxRecord {
    std::string txid;  // display-order hex
    std::int64_t time = 0;
    bool coinbase = false;
    std::vector<std::pair<std::string, std::int64_t>> in;
    std::vector<std::pair<std::string, std::int64_t>> out;

    bool operator==(const TxRecord&) const = default;
};

/// Inputs of a coinbase tx resolve to this reserved label.
inline constexpr std::string_view kCoinbaseAddress = "coinbase";

struct OutPoint {
    std::array<std::uint8_t, 32> txid{};
    std::uint32_t vout = 0;

    bool operator==(const OutPoint&) const = default;
};

struct OutPointHash {
    std::size_t operator()(const OutPoint& op) const {
        // txids are hash outputs, so their leading bytes are already uniform.
        std::uint64_t word = 0;
        for (int i = 0; i < 8; ++i) word = (word << 8) | op.txid[i];
        return static_cast<std::size_t>(word ^ (std::uint64_t{op.vout} * 0x9e3779b97f4a7c15ull));
    }
};

struct UtxoEntry {
    std::string address;
    std::int64_t value = 0;

    bool operator==(const UtxoEntry&) const = default;
};

using UtxoIndex = std::unordered_map<OutPoint, UtxoEntry, OutPointHash>;

struct ResolveResult {
    std::vector<TxRecord> records;
    UtxoIndex utxo;  // unspent outputs remaining after the last block
};

/// Two-pass spend resolution: index every output, then walk transactions in
/// block order replacing each input with the funding output's (address,
/// value). Throws ResolveError on spends of unknown outputs, double-spends,
/// and negative implied fees.
ResolveResult resolve(const std::vector<Block>& blocks);

/// JSONL persistence. One object per line, fixed key order:
/// {"txid":..,"time":..,"coinbase":..,"in":[[addr,sat],..],"out":[..]}
void write_records(const std::string& path, std::span<const TxRecord> records);
std::string record_to_json(const TxRecord& record);

/// Structural validation only (types, hex64 txid, non-negative values);
/// malformed lines raise ParseError naming the line number.
std::vector<TxRecord> read_records(const std::string& path);

}  // namespace chaintrace::blockparse
