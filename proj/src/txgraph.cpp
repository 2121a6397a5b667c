#include "chaintrace/txgraph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include "chaintrace/util.hpp"

namespace chaintrace::txgraph {

void Graph::add_edge(Edge edge) {
    nodes.insert(edge.src);
    nodes.insert(edge.dst);
    edges.push_back(std::move(edge));
}

std::unordered_map<std::string, std::vector<std::size_t>> Graph::out_index() const {
    std::unordered_map<std::string, std::vector<std::size_t>> index;
    for (std::size_t i = 0; i < edges.size(); ++i) index[edges[i].src].push_back(i);
    return index;
}

std::unordered_map<std::string, std::vector<std::size_t>> Graph::in_index() const {
    std::unordered_map<std::string, std::vector<std::size_t>> index;
    for (std::size_t i = 0; i < edges.size(); ++i) index[edges[i].dst].push_back(i);
    return index;
}

Graph build(std::span<const blockparse::TxRecord> records, const BuildOptions& options) {
    Graph graph;
    for (const auto& rec : records) {
        if (rec.coinbase) continue;
        if (!options.window.contains(rec.time)) continue;

        // Collapse duplicate addresses on each side; a multigraph edge per
        // UTXO entry would overstate parallelism within one transaction.
        std::map<std::string, std::int64_t> in_by_addr;
        for (const auto& [addr, value] : rec.in) in_by_addr[addr] += value;
        std::map<std::string, std::int64_t> out_by_addr;
        for (const auto& [addr, value] : rec.out) out_by_addr[addr] += value;
        if (in_by_addr.empty() || out_by_addr.empty()) continue;

        std::int64_t total_in = 0;
        for (const auto& [addr, value] : in_by_addr) total_in += value;

        for (const auto& [out_addr, out_value] : out_by_addr) {
            // Floored proportional shares; the leftover satoshis go to the
            // lexicographically smallest input address (the map's first key),
            // so the shares sum to out_value exactly.
            std::vector<std::pair<const std::string*, std::int64_t>> shares;
            shares.reserve(in_by_addr.size());
            std::int64_t assigned = 0;
            for (const auto& [in_addr, in_value] : in_by_addr) {
                std::int64_t share = 0;
                if (total_in > 0) {
                    share = static_cast<std::int64_t>(
                        (static_cast<__int128>(out_value) * in_value) / total_in);
                }
                assigned += share;
                shares.emplace_back(&in_addr, share);
            }
            shares.front().second += out_value - assigned;
            for (const auto& [in_addr, share] : shares) {
                graph.add_edge({*in_addr, out_addr, share, rec.time, rec.txid});
            }
        }
    }

    if (options.min_value > 0) {
        std::erase_if(graph.edges,
                      [&](const Edge& e) { return e.value < options.min_value; });
        // Recompute the node set from surviving endpoints.
        graph.nodes.clear();
        for (const auto& e : graph.edges) {
            graph.nodes.insert(e.src);
            graph.nodes.insert(e.dst);
        }
    }
    return graph;
}

GraphStats stats(const Graph& graph) {
    GraphStats s;
    s.node_count = graph.nodes.size();
    s.edge_count = graph.edges.size();
    std::set<std::string> txids;
    for (const auto& e : graph.edges) txids.insert(e.txid);
    s.tx_count = txids.size();
    return s;
}

namespace {

bool edge_file_order(const Edge& a, const Edge& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.txid != b.txid) return a.txid < b.txid;
    if (a.src != b.src) return a.src < b.src;
    return a.dst < b.dst;
}

}  // namespace

std::string to_tsv(const Graph& graph) {
    std::vector<Edge> sorted = graph.edges;
    std::sort(sorted.begin(), sorted.end(), edge_file_order);
    std::string out;
    for (const auto& e : sorted) {
        out += e.src;
        out += '\t';
        out += e.dst;
        out += '\t';
        out += std::to_string(e.value);
        out += '\t';
        out += std::to_string(e.time);
        out += '\t';
        out += e.txid;
        out += '\n';
    }
    return out;
}

void save(const std::string& path, const Graph& graph) {
    util::write_file(path, to_tsv(graph));
}

Graph load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphError("cannot open " + path);

    Graph graph;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 5) {
            throw GraphError(path + " line " + std::to_string(lineno) +
                             ": expected 5 tab-separated fields, got " +
                             std::to_string(fields.size()));
        }
        Edge e;
        e.src = fields[0];
        e.dst = fields[1];
        auto parse_int = [&](const std::string& s, const char* what) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size()) {
                throw GraphError(path + " line " + std::to_string(lineno) + ": bad " + what +
                                 " '" + s + "'");
            }
            return v;
        };
        e.value = parse_int(fields[2], "value");
        if (e.value < 0) {
            throw GraphError(path + " line " + std::to_string(lineno) + ": negative value");
        }
        e.time = parse_int(fields[3], "timestamp");
        e.txid = fields[4];
        if (e.src.empty() || e.dst.empty() || e.txid.empty()) {
            throw GraphError(path + " line " + std::to_string(lineno) + ": empty field");
        }
        graph.add_edge(std::move(e));
    }
    return graph;
}

}  // namespace chaintrace::txgraph
