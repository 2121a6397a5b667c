#include "chaintrace/rank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "chaintrace/util.hpp"

namespace chaintrace::rank {

RankResult pagerank(const txgraph::Graph& graph, const RankOptions& options) {
    if (graph.nodes.empty()) throw std::invalid_argument("empty graph");
    if (!(options.damping > 0.0 && options.damping < 1.0)) {
        throw std::invalid_argument("damping must be in (0, 1)");
    }
    if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");

    // Stable node order: the set is already sorted.
    std::vector<std::string> names(graph.nodes.begin(), graph.nodes.end());
    const std::size_t n = names.size();
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(n);
    for (std::size_t i = 0; i < n; ++i) index.emplace(names[i], i);

    // Per source: (target, weight) pairs and the total outgoing weight.
    std::vector<std::vector<std::pair<std::size_t, double>>> out(n);
    std::vector<double> out_weight(n, 0.0);
    for (const auto& e : graph.edges) {
        double w = options.weight == EdgeWeight::multiplicity
                       ? 1.0
                       : static_cast<double>(e.value);
        if (w <= 0.0) continue;  // zero-value edges carry no rank mass
        std::size_t s = index.at(e.src);
        out[s].emplace_back(index.at(e.dst), w);
        out_weight[s] += w;
    }

    const double d = options.damping;
    std::vector<double> cur(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);

    RankResult result;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        double dangling = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (out_weight[i] == 0.0) dangling += cur[i];
        }

        const double base = (1.0 - d) / static_cast<double>(n) +
                            d * dangling / static_cast<double>(n);
        std::fill(next.begin(), next.end(), base);
        for (std::size_t i = 0; i < n; ++i) {
            if (out_weight[i] == 0.0) continue;
            const double scale = d * cur[i] / out_weight[i];
            for (const auto& [target, w] : out[i]) next[target] += scale * w;
        }

        double delta = 0.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            delta += std::fabs(next[i] - cur[i]);
            sum += next[i];
        }
        result.max_sum_drift = std::max(result.max_sum_drift, std::fabs(sum - 1.0));
        cur.swap(next);
        result.iterations = iter;
        result.residual = delta;
        if (delta < options.tol) {
            result.converged = true;
            break;
        }
    }

    for (std::size_t i = 0; i < n; ++i) result.scores.emplace(names[i], cur[i]);
    return result;
}

std::vector<std::pair<std::string, double>> top_k(const RankResult& result, std::size_t k) {
    std::vector<std::pair<std::string, double>> out(result.scores.begin(), result.scores.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (k < out.size()) out.resize(k);
    return out;
}

std::string ranks_to_tsv(const RankResult& result, std::size_t top) {
    auto rows = top_k(result, top == 0 ? result.scores.size() : top);
    std::string out;
    char buf[40];
    for (const auto& [node, score] : rows) {
        std::snprintf(buf, sizeof buf, "%.12e", score);
        out += node;
        out += '\t';
        out += buf;
        out += '\n';
    }
    return out;
}

void save_ranks(const std::string& path, const RankResult& result, std::size_t top) {
    util::write_file(path, ranks_to_tsv(result, top));
}

}  // namespace chaintrace::rank
