#include "chaintrace/addrcodec.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "chaintrace/hash.hpp"
#include "chaintrace/util.hpp"

namespace chaintrace::addrcodec {

namespace {

// Maps ASCII to a Base58 digit, or -1 for characters outside the alphabet.
constexpr std::array<std::int8_t, 256> make_digit_table() {
    std::array<std::int8_t, 256> table{};
    table.fill(-1);
    for (std::size_t i = 0; i < kBase58Alphabet.size(); ++i) {
        table[static_cast<unsigned char>(kBase58Alphabet[i])] = static_cast<std::int8_t>(i);
    }
    return table;
}

constexpr auto kDigitTable = make_digit_table();

inline bool is_base58(char c) { return kDigitTable[static_cast<unsigned char>(c)] >= 0; }

// Base58 -> bytes. Assumes every character is in the alphabet.
std::vector<std::uint8_t> decode_base58(std::string_view text) {
    std::size_t leading_ones = 0;
    while (leading_ones < text.size() && text[leading_ones] == '1') ++leading_ones;

    // Each Base58 digit carries log(58)/log(256) ~ 0.733 bytes.
    std::vector<std::uint8_t> buf(text.size() * 733 / 1000 + 1, 0);
    for (char c : text) {
        int carry = kDigitTable[static_cast<unsigned char>(c)];
        for (auto it = buf.rbegin(); it != buf.rend(); ++it) {
            carry += 58 * *it;
            *it = static_cast<std::uint8_t>(carry & 0xff);
            carry >>= 8;
        }
    }

    auto first = std::find_if(buf.begin(), buf.end(), [](std::uint8_t b) { return b != 0; });
    std::vector<std::uint8_t> out(leading_ones, 0);
    out.insert(out.end(), first, buf.end());
    return out;
}

std::string encode_base58(std::span<const std::uint8_t> bytes) {
    std::size_t leading_zeros = 0;
    while (leading_zeros < bytes.size() && bytes[leading_zeros] == 0) ++leading_zeros;

    // Each byte expands to log(256)/log(58) ~ 1.365 digits.
    std::vector<std::uint8_t> buf(bytes.size() * 137 / 100 + 1, 0);
    for (std::uint8_t byte : bytes) {
        int carry = byte;
        for (auto it = buf.rbegin(); it != buf.rend(); ++it) {
            carry += 256 * *it;
            *it = static_cast<std::uint8_t>(carry % 58);
            carry /= 58;
        }
    }

    auto first = std::find_if(buf.begin(), buf.end(), [](std::uint8_t b) { return b != 0; });
    std::string out(leading_zeros, '1');
    for (auto it = first; it != buf.end(); ++it) out += kBase58Alphabet[*it];
    return out;
}

}  // namespace

std::string_view to_string(DecodeError err) {
    switch (err) {
        case DecodeError::invalid_alphabet: return "invalid_alphabet";
        case DecodeError::bad_length: return "bad_length";
        case DecodeError::checksum_mismatch: return "checksum_mismatch";
    }
    return "unknown";
}

std::string_view to_string(ScriptKind kind) {
    switch (kind) {
        case ScriptKind::p2pkh: return "p2pkh";
        case ScriptKind::p2pk: return "p2pk";
        case ScriptKind::nonstandard: return "nonstandard";
    }
    return "unknown";
}

DecodeResult validate(std::string_view candidate) {
    DecodeResult result;

    for (char c : candidate) {
        if (!is_base58(c)) {
            result.error = DecodeError::invalid_alphabet;
            return result;
        }
    }
    if (candidate.size() < kMinAddressChars || candidate.size() > kMaxAddressChars) {
        result.error = DecodeError::bad_length;
        return result;
    }

    std::vector<std::uint8_t> raw = decode_base58(candidate);
    // version + 20-byte payload + 4-byte checksum
    if (raw.size() != 1 + kPayloadSize + 4) {
        result.error = DecodeError::bad_length;
        return result;
    }

    auto digest = double_sha256(std::span(raw.data(), raw.size() - 4));
    if (std::memcmp(digest.data(), raw.data() + raw.size() - 4, 4) != 0) {
        result.error = DecodeError::checksum_mismatch;
        return result;
    }

    DecodedAddress decoded;
    decoded.version = raw[0];
    std::copy(raw.begin() + 1, raw.end() - 4, decoded.payload.begin());
    result.decoded = decoded;
    return result;
}

std::string encode(std::uint8_t version, std::span<const std::uint8_t> payload) {
    if (payload.size() != kPayloadSize) {
        throw std::invalid_argument("address payload must be exactly 20 bytes");
    }
    std::vector<std::uint8_t> raw;
    raw.reserve(1 + kPayloadSize + 4);
    raw.push_back(version);
    raw.insert(raw.end(), payload.begin(), payload.end());
    auto digest = double_sha256(std::span(raw.data(), raw.size()));
    raw.insert(raw.end(), digest.begin(), digest.begin() + 4);
    return encode_base58(raw);
}

std::vector<std::pair<std::size_t, std::string>> extract_candidates_pos(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_base58(text[i])) {
            ++i;
            continue;
        }
        std::size_t run_start = i;
        while (i < text.size() && is_base58(text[i])) ++i;
        // Within a maximal Base58 run, take every '1'-anchored candidate of
        // 27..34 chars greedily, matching the usual regex semantics.
        std::size_t pos = run_start;
        while (pos < i) {
            if (text[pos] != '1') {
                ++pos;
                continue;
            }
            std::size_t remaining = i - pos;
            if (remaining < 1 + kMinAddressChars) break;  // too short, and only shrinking
            std::size_t take = std::min<std::size_t>(remaining, 1 + kMaxAddressChars - 2);
            out.emplace_back(pos, std::string(text.substr(pos, take)));
            pos += take;
        }
    }
    return out;
}

std::vector<std::string> extract_candidates(std::string_view text) {
    std::vector<std::string> out;
    for (auto& [pos, cand] : extract_candidates_pos(text)) {
        (void)pos;
        out.push_back(std::move(cand));
    }
    return out;
}

ScriptClass classify_script(std::span<const std::uint8_t> script) {
    ScriptClass out;

    // OP_DUP OP_HASH160 0x14 <20 bytes> OP_EQUALVERIFY OP_CHECKSIG
    if (script.size() == 25 && script[0] == 0x76 && script[1] == 0xa9 && script[2] == 0x14 &&
        script[23] == 0x88 && script[24] == 0xac) {
        out.kind = ScriptKind::p2pkh;
        out.node_id = encode(0x00, script.subspan(3, kPayloadSize));
        return out;
    }

    // <push 33|65 byte pubkey> OP_CHECKSIG; the node is the pay-to-pubkey-hash
    // address of the same key so both script forms land on one identity.
    if ((script.size() == 35 && script[0] == 33) || (script.size() == 67 && script[0] == 65)) {
        if (script[script.size() - 1] == 0xac) {
            auto h = hash160(script.subspan(1, script.size() - 2));
            out.kind = ScriptKind::p2pk;
            out.node_id = encode(0x00, std::span(h.data(), h.size()));
            return out;
        }
    }

    auto h = hash160(script);
    out.kind = ScriptKind::nonstandard;
    out.node_id = "script:" + util::to_hex(std::span(h.data(), h.size()));
    return out;
}

}  // namespace chaintrace::addrcodec
