#include "chaintrace/entity.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "chaintrace/util.hpp"

namespace chaintrace::entity {

std::size_t EntityPartition::id_of(const std::string& address) {
    auto it = index_.find(address);
    if (it != index_.end()) return it->second;
    std::size_t id = addresses_.size();
    index_.emplace(address, id);
    addresses_.push_back(address);
    parent_.push_back(id);
    rank_size_.push_back(1);
    min_member_.push_back(id);
    return id;
}

std::size_t EntityPartition::find_root(std::size_t i) const {
    std::size_t root = i;
    while (parent_[root] != root) root = parent_[root];
    // Path compression; logically const, the partition is unchanged.
    while (parent_[i] != root) {
        std::size_t next = parent_[i];
        parent_[i] = root;
        i = next;
    }
    return root;
}

void EntityPartition::add(const std::string& address) { (void)id_of(address); }

void EntityPartition::unite(const std::string& a, const std::string& b) {
    std::size_t ra = find_root(id_of(a));
    std::size_t rb = find_root(id_of(b));
    if (ra == rb) return;
    if (rank_size_[ra] < rank_size_[rb]) std::swap(ra, rb);
    parent_[rb] = ra;
    rank_size_[ra] += rank_size_[rb];
    if (addresses_[min_member_[rb]] < addresses_[min_member_[ra]]) {
        min_member_[ra] = min_member_[rb];
    }
}

void EntityPartition::unite_all(std::span<const std::string> addresses) {
    if (addresses.empty()) return;
    for (std::size_t i = 1; i < addresses.size(); ++i) unite(addresses[0], addresses[i]);
    if (addresses.size() == 1) add(addresses[0]);
}

std::string EntityPartition::entity_of(const std::string& address) const {
    auto it = index_.find(address);
    if (it == index_.end()) return address;
    return addresses_[min_member_[find_root(it->second)]];
}

std::vector<std::string> EntityPartition::members() const {
    std::vector<std::string> out = addresses_;
    std::sort(out.begin(), out.end());
    return out;
}

void EntityPartition::finalize() {
    for (std::size_t i = 0; i < parent_.size(); ++i) (void)find_root(i);
}

bool EntityPartition::same_partition(const EntityPartition& other) const {
    if (addresses_.size() != other.addresses_.size()) return false;
    auto mine = members();
    auto theirs = other.members();
    if (mine != theirs) return false;
    for (const auto& addr : mine) {
        if (entity_of(addr) != other.entity_of(addr)) return false;
    }
    return true;
}

EntityPartition cluster(std::span<const blockparse::TxRecord> records) {
    EntityPartition partition;
    for (const auto& rec : records) {
        if (rec.coinbase) continue;
        if (rec.in.empty()) continue;
        const std::string& first = rec.in.front().first;
        partition.add(first);
        for (std::size_t i = 1; i < rec.in.size(); ++i) partition.unite(first, rec.in[i].first);
    }
    partition.finalize();
    return partition;
}

txgraph::Graph project(const txgraph::Graph& graph, const EntityPartition& partition) {
    txgraph::Graph out;
    for (const auto& node : graph.nodes) out.nodes.insert(partition.entity_of(node));
    for (const auto& e : graph.edges) {
        out.add_edge({partition.entity_of(e.src), partition.entity_of(e.dst), e.value, e.time,
                      e.txid});
    }
    return out;
}

std::string to_tsv(const EntityPartition& partition) {
    std::string out;
    for (const auto& addr : partition.members()) {
        out += addr;
        out += '\t';
        out += partition.entity_of(addr);
        out += '\n';
    }
    return out;
}

void save(const std::string& path, const EntityPartition& partition) {
    util::write_file(path, to_tsv(partition));
}

EntityPartition load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw txgraph::GraphError("cannot open " + path);

    EntityPartition partition;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw txgraph::GraphError(path + " line " + std::to_string(lineno) +
                                      ": expected `address\\tentity`");
        }
        partition.unite(fields[0], fields[1]);
    }
    partition.finalize();
    return partition;
}

}  // namespace chaintrace::entity
