#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "chaintrace/blockparse.hpp"

namespace chaintrace::txgraph {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Edge {
    std::string src;
    std::string dst;
    std::int64_t value = 0;  // satoshis
    std::int64_t time = 0;   // epoch seconds, from the enclosing block
    std::string txid;

    bool operator==(const Edge&) const = default;
    auto operator<=>(const Edge&) const = default;
};

/// Half-open interval [start, end) in epoch seconds.
struct TimeWindow {
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
    std::int64_t end = std::numeric_limits<std::int64_t>::max();

    bool contains(std::int64_t t) const { return t >= start && t < end; }
    static TimeWindow all() { return {}; }
};

/// Directed multigraph over address (or entity) strings. Parallel edges are
/// meaningful and preserved.
struct Graph {
    std::set<std::string> nodes;
    std::vector<Edge> edges;

    void add_edge(Edge edge);

    /// Edge indices per endpoint, built lazily by callers that need them.
    std::unordered_map<std::string, std::vector<std::size_t>> out_index() const;
    std::unordered_map<std::string, std::vector<std::size_t>> in_index() const;

    bool operator==(const Graph&) const = default;
};

struct BuildOptions {
    TimeWindow window = TimeWindow::all();
    std::int64_t min_value = 0;  // drop edges below this many satoshis
};

/// Folds records into the address graph. Coinbase records are skipped; for
/// each in-window record, every (input address, output address) pair gets one
/// edge whose value is the output's value apportioned by the input address's
/// share of total input, in integer satoshis. Rounding remainders for each
/// output go to the lexicographically smallest input address, so per-record
/// edge values always sum to the record's total output value.
Graph build(std::span<const blockparse::TxRecord> records, const BuildOptions& options = {});

struct GraphStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t tx_count = 0;  // distinct txids across edges

    bool operator==(const GraphStats&) const = default;
};

GraphStats stats(const Graph& graph);

/// TSV persistence: `src\tdst\tvalue_sat\ttimestamp\ttxid` per line, sorted
/// by (timestamp, txid, src, dst) so identical graphs serialize to identical
/// bytes.
void save(const std::string& path, const Graph& graph);
std::string to_tsv(const Graph& graph);

/// Malformed lines raise GraphError naming the line number.
Graph load(const std::string& path);

}  // namespace chaintrace::txgraph
