#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chaintrace/blockparse.hpp"
#include "chaintrace/txgraph.hpp"

namespace chaintrace::entity {

/// Disjoint-set forest over address strings. The entity id of a component is
/// its lexicographically smallest member, which makes ids stable across runs
/// regardless of union order.
class EntityPartition {
public:
    /// Ensures the address exists (as a singleton if unseen).
    void add(const std::string& address);

    /// Unions the two addresses' components.
    void unite(const std::string& a, const std::string& b);

    /// Unions all addresses in the list into one component.
    void unite_all(std::span<const std::string> addresses);

    /// Component id: the lexicographically smallest member. Addresses never
    /// added are their own singleton by convention.
    std::string entity_of(const std::string& address) const;

    /// All explicitly added addresses, sorted.
    std::vector<std::string> members() const;

    /// Fully compresses paths; afterwards entity_of never walks a chain.
    void finalize();

    std::size_t size() const { return addresses_.size(); }

    /// Two partitions are equal when they group the same addresses the same
    /// way (forest shape is irrelevant).
    bool same_partition(const EntityPartition& other) const;

private:
    std::size_t id_of(const std::string& address);
    std::size_t find_root(std::size_t i) const;

    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> addresses_;
    mutable std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_size_;
    std::vector<std::size_t> min_member_;  // per root: index of lexicographic minimum
};

/// Multi-input heuristic: every non-coinbase record's input addresses are
/// unioned, transitively across records. Coinbase and output addresses do not
/// link anything (outputs are still reachable via entity_of as singletons).
EntityPartition cluster(std::span<const blockparse::TxRecord> records);

/// Rewrites every edge endpoint to its entity id. Value, timestamp and txid
/// are preserved, so edge count and total value are exactly preserved;
/// intra-entity transfers become self-loops and stay visible.
txgraph::Graph project(const txgraph::Graph& graph, const EntityPartition& partition);

/// TSV persistence: `address\tentity_id`, sorted by address.
void save(const std::string& path, const EntityPartition& partition);
std::string to_tsv(const EntityPartition& partition);
EntityPartition load(const std::string& path);

}  // namespace chaintrace::entity
