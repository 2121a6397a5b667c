#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace chaintrace {

using Digest256 = std::array<std::uint8_t, 32>;
using Digest160 = std::array<std::uint8_t, 20>;

Digest256 sha256(std::span<const std::uint8_t> data);

/// SHA-256 applied twice; the protocol's transaction/block id hash.
Digest256 double_sha256(std::span<const std::uint8_t> data);

Digest160 ripemd160(std::span<const std::uint8_t> data);

/// RIPEMD-160 of SHA-256; the public-key-to-address hash.
Digest160 hash160(std::span<const std::uint8_t> data);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace chaintrace
