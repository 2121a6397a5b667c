#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chaintrace::addrcodec {

/// All alphanumerics except 0, O, I and l.
inline constexpr std::string_view kBase58Alphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

inline constexpr std::size_t kPayloadSize = 20;
inline constexpr std::size_t kMinAddressChars = 26;
inline constexpr std::size_t kMaxAddressChars = 35;

enum class DecodeError {
    invalid_alphabet,   // a character outside the Base58 alphabet
    bad_length,         // text or decoded byte length out of range
    checksum_mismatch,  // the trailing 4 checksum bytes do not verify
};

std::string_view to_string(DecodeError err);

struct DecodedAddress {
    std::uint8_t version = 0;
    std::array<std::uint8_t, kPayloadSize> payload{};

    bool operator==(const DecodedAddress&) const = default;
};

/// Outcome of validating a candidate address string.
struct DecodeResult {
    std::optional<DecodedAddress> decoded;
    DecodeError error = DecodeError::invalid_alphabet;

    bool ok() const { return decoded.has_value(); }
    explicit operator bool() const { return ok(); }
};

/// Full Base58Check validation: alphabet, length, then the 4-byte
/// double-SHA-256 checksum. The three failure modes are distinguishable.
DecodeResult validate(std::string_view candidate);

/// Base58Check encoding of version || payload. Leading zero bytes become
/// leading '1' characters. Throws std::invalid_argument unless the payload
/// is exactly 20 bytes.
std::string encode(std::uint8_t version, std::span<const std::uint8_t> payload);

/// Scans free text for address-shaped substrings: a '1' followed by 26..33
/// more Base58 characters, taken greedily and non-overlapping. This is the
/// cheap first-pass filter; callers checksum-validate the survivors.
std::vector<std::string> extract_candidates(std::string_view text);

/// extract_candidates with byte offsets, for callers that need to know
/// where in the text each candidate sat.
std::vector<std::pair<std::size_t, std::string>> extract_candidates_pos(std::string_view text);

enum class ScriptKind { p2pkh, p2pk, nonstandard };

std::string_view to_string(ScriptKind kind);

/// The graph identity derived from an output script: a Base58Check address
/// for the standard templates, otherwise a deterministic synthetic label so
/// that every output still maps to exactly one node.
struct ScriptClass {
    ScriptKind kind = ScriptKind::nonstandard;
    std::string node_id;

    bool operator==(const ScriptClass&) const = default;
};

/// Recognizes P2PKH (OP_DUP OP_HASH160 <20> OP_EQUALVERIFY OP_CHECKSIG) and
/// P2PK (<33|65 byte pubkey> OP_CHECKSIG). Anything else gets the synthetic
/// label "script:" + hex(hash160(script)).
ScriptClass classify_script(std::span<const std::uint8_t> script);

}  // namespace chaintrace::addrcodec
