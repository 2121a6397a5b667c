#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "chaintrace/txgraph.hpp"

namespace chaintrace::rank {

enum class EdgeWeight {
    multiplicity,  // each edge is one unit; parallel edges count multiply
    value,         // edges weighted by transferred satoshis
};

struct RankOptions {
    double damping = 0.85;
    double tol = 1e-10;
    int max_iter = 200;
    EdgeWeight weight = EdgeWeight::multiplicity;
};

struct RankResult {
    std::map<std::string, double> scores;  // node -> probability
    int iterations = 0;
    double residual = 0.0;        // final L1 delta between iterations
    bool converged = false;       // false iff max_iter was exhausted
    double max_sum_drift = 0.0;   // worst |sum(scores) - 1| seen at any iteration
};

/// Power iteration over the out-edge-normalized transition with uniform
/// teleport. A node's out-weight splits across its out-edges (by multiplicity
/// or value); nodes with no outgoing weight spread their mass uniformly.
/// Stops when the L1 change drops below tol. Throws std::invalid_argument on
/// an empty graph or out-of-range parameters.
RankResult pagerank(const txgraph::Graph& graph, const RankOptions& options = {});

/// Top k scores, descending; ties broken by ascending node id. k beyond the
/// node count returns everything.
std::vector<std::pair<std::string, double>> top_k(const RankResult& result, std::size_t k);

/// TSV `entity\tscore`, descending, same tie rule; top == 0 writes all nodes.
void save_ranks(const std::string& path, const RankResult& result, std::size_t top = 0);
std::string ranks_to_tsv(const RankResult& result, std::size_t top = 0);

}  // namespace chaintrace::rank
