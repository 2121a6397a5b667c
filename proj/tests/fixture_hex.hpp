// Raw fixture transactions pinned as hex, with txids computed by an
// out-of-repo double-SHA-256 implementation.
#pragma once

namespace fixture_hex {

inline constexpr const char* kTx1Hex =
    "01000000010000000000000000000000000000000000000000000000000000000000000000ffffffff0504de"
    "adbeefffffffff0100f2052a010000001976a914111111111111111111111111111111111111111188ac0000"
    "0000";
inline constexpr const char* kTx1Id = "3cfd0ab14f34a3d6ddeb0cde66f1229aa86e8bce5f362c29d1366c42e370a04b";

inline constexpr const char* kTx2Hex =
    "01000000014ba070e3426c36d1292c365fce8b6ea89a22f166de0cebddd6a3344fb10afd3c000000000100ff"
    "ffffff02005ed0b2000000001976a914222222222222222222222222222222222222222288ac009435770000"
    "00001976a914333333333333333333333333333333333333333388ac00000000";
inline constexpr const char* kTx2Id = "1d40d1383d2c9bac36b9be2f30910527b114fc3921a2d928fe5fb1b2a0b386c3";

inline constexpr const char* kTx3Hex =
    "0100000002c386b3a0b2b15ffe28d9a22139fc14b1270591302fbeb936ac9b2c3d38d1401d000000000100ff"
    "ffffffc386b3a0b2b15ffe28d9a22139fc14b1270591302fbeb936ac9b2c3d38d1401d010000000100ffffff"
    "ff0100f2052a01000000232102ababababababababababababababababababababababababababababababab"
    "abac00000000";
inline constexpr const char* kTx3Id = "c12bbd16f76c69bfec8cbabb7adb9cbbcc1a80aac261eb0e5988517e77b1e97f";

inline constexpr const char* kBlockStreamHex =
    "f9beb4d923010000020000000000000000000000000000000000000000000000000000000000000000000000"
    "000000000000000000000000000000000000000000000000000000000000000080b46952ffff001d2a000000"
    "0201000000010000000000000000000000000000000000000000000000000000000000000000ffffffff0504"
    "deadbeefffffffff0100f2052a010000001976a914111111111111111111111111111111111111111188ac00"
    "00000001000000014ba070e3426c36d1292c365fce8b6ea89a22f166de0cebddd6a3344fb10afd3c00000000"
    "0100ffffffff02005ed0b2000000001976a914222222222222222222222222222222222222222288ac009435"
    "77000000001976a914333333333333333333333333333333333333333388ac00000000";

}  // namespace fixture_hex
