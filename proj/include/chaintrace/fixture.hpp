#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chaintrace/blockparse.hpp"

namespace chaintrace::fixture {

/// A self-contained synthetic world: a week of raw blocks, a daily rate
/// table, and a small forum corpus, plus the ground truth the generator
/// planted so tests and reports can check end-to-end results exactly.
///
/// The world stages the motifs the toolkit exists to find: a marketplace
/// entity whose addresses consolidate into one cluster, a mass seizure of
/// its funds as hundreds of equal-value transfers to a single collection
/// address, a high-degree gambling hub, a forum user two payment hops from
/// the marketplace, and background noise.
struct DemoWorld {
    std::vector<blockparse::Block> blocks;
    std::string rates_csv;
    /// (filename, content), sorted by filename.
    std::vector<std::pair<std::string, std::string>> corpus;

    std::string fbi_address;          // seizure sink, never spends
    std::string dice_address;         // gambling hub (bets arrive here)
    std::string dice_key_address;     // hub's pay-to-pubkey change identity
    std::string faucet_address;       // funds the background users
    std::vector<std::string> sr_addresses;
    std::string sr_entity;            // lexicographic min of sr_addresses
    std::vector<std::string> voodah_addresses;
    std::string voodah_entity;
    std::vector<std::string> broker_addresses;
    std::vector<std::string> user_addresses;

    /// Exactly what a harvest of the corpus should return.
    std::vector<std::pair<std::string, std::string>> planted_pairs;

    std::size_t seizure_count = 0;
    std::int64_t seizure_value = 0;   // satoshis per seizure transfer
    std::int64_t seizure_day = 0;     // epoch seconds, start of the seizure day
};

/// Deterministic for a given seed: the structure is fixed, the seed only
/// drives background payment values.
DemoWorld make_demo_world(std::uint64_t seed);

/// Writes <dir>/blocks/blk0000*.dat, <dir>/rates.csv and <dir>/corpus/*.
void write_demo_inputs(const std::string& dir, const DemoWorld& world);

}  // namespace chaintrace::fixture
