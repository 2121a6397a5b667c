#include "chaintrace/annotate.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <unordered_map>
#include <unordered_set>

#include "chaintrace/addrcodec.hpp"
#include "chaintrace/util.hpp"

namespace chaintrace::annotate {

namespace fs = std::filesystem;

std::string_view to_string(Source source) {
    switch (source) {
        case Source::scraped: return "scraped";
        case Source::fingerprint: return "fingerprint";
        case Source::manual: return "manual";
    }
    return "unknown";
}

Source source_from_string(std::string_view text) {
    if (text == "scraped") return Source::scraped;
    if (text == "fingerprint") return Source::fingerprint;
    if (text == "manual") return Source::manual;
    throw AnnotateError("unknown source '" + std::string(text) + "'");
}

namespace {

void check_invariants(const Annotation& a) {
    auto decoded = addrcodec::validate(a.address);
    if (!decoded.ok()) {
        throw AnnotateError("invalid address '" + a.address +
                            "': " + std::string(addrcodec::to_string(decoded.error)));
    }
    if (!(a.confidence > 0.0) || a.confidence > 1.0) {
        throw AnnotateError("confidence must be in (0, 1] for '" + a.identity + "'");
    }
    if ((a.source == Source::scraped || a.source == Source::manual) && a.confidence != 1.0) {
        throw AnnotateError("definitive sources carry confidence 1.0, got " +
                            std::to_string(a.confidence) + " for '" + a.identity + "'");
    }
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

AddOutcome AnnotationStore::add(Annotation annotation) {
    check_invariants(annotation);
    auto key = std::make_pair(annotation.identity, annotation.address);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        entries_.emplace(std::move(key), std::move(annotation));
        return AddOutcome::inserted;
    }
    if (annotation.confidence > it->second.confidence) {
        it->second = std::move(annotation);
        return AddOutcome::replaced;
    }
    return AddOutcome::kept;
}

std::vector<Annotation> AnnotationStore::all() const {
    std::vector<Annotation> out;
    out.reserve(entries_.size());
    for (const auto& [key, value] : entries_) out.push_back(value);
    return out;
}

std::vector<Annotation> AnnotationStore::for_address(const std::string& address) const {
    std::vector<Annotation> out;
    for (const auto& [key, value] : entries_) {
        if (key.second == address) out.push_back(value);
    }
    return out;
}

namespace {

struct Marker {
    std::size_t offset = 0;
    std::string identity;
};

// `Author: NAME` lines, key case-insensitive, leading whitespace allowed.
void find_author_lines(std::string_view text, std::vector<Marker>& markers) {
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        std::string_view line = text.substr(line_start, line_end - line_start);
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        static constexpr std::string_view kKey = "author:";
        if (line.size() - i >= kKey.size()) {
            bool hit = true;
            for (std::size_t j = 0; j < kKey.size(); ++j) {
                if (std::tolower(static_cast<unsigned char>(line[i + j])) != kKey[j]) {
                    hit = false;
                    break;
                }
            }
            if (hit) {
                std::string name = trim(line.substr(i + kKey.size()));
                if (!name.empty()) markers.push_back({line_start, std::move(name)});
            }
        }
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }
}

// `class="poster_info"` blocks: the first following link's text names the
// poster, the forum-page layout where the byline precedes the post body.
void find_poster_blocks(std::string_view text, std::vector<Marker>& markers) {
    std::size_t pos = 0;
    while ((pos = text.find("poster_info", pos)) != std::string_view::npos) {
        std::size_t anchor = text.find("<a", pos);
        if (anchor == std::string_view::npos) break;
        std::size_t open_end = text.find('>', anchor);
        if (open_end == std::string_view::npos) break;
        std::size_t close = text.find("</a>", open_end);
        if (close == std::string_view::npos) break;
        std::string name = trim(text.substr(open_end + 1, close - open_end - 1));
        if (!name.empty()) markers.push_back({pos, std::move(name)});
        pos = close + 4;
    }
}

}  // namespace

HarvestResult harvest(const std::string& corpus_dir) {
    std::error_code ec;
    if (!fs::is_directory(corpus_dir, ec)) {
        throw AnnotateError("corpus directory not found: " + corpus_dir);
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir)) {
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    HarvestResult result;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& path : files) {
        if (fs::is_directory(path, ec)) continue;
        std::string text;
        try {
            text = util::read_file(path);
        } catch (const std::exception&) {
            ++result.skipped_files;
            continue;
        }

        std::vector<Marker> markers;
        find_author_lines(text, markers);
        find_poster_blocks(text, markers);
        std::sort(markers.begin(), markers.end(),
                  [](const Marker& a, const Marker& b) { return a.offset < b.offset; });

        std::string stem = path.stem().string();
        for (const auto& [pos, candidate] : addrcodec::extract_candidates_pos(text)) {
            if (!addrcodec::validate(candidate).ok()) continue;
            std::string identity = stem;
            for (auto it = markers.rbegin(); it != markers.rend(); ++it) {
                if (it->offset < pos) {
                    identity = it->identity;
                    break;
                }
            }
            seen.emplace(std::move(identity), candidate);
        }
    }
    result.pairs.assign(seen.begin(), seen.end());
    return result;
}

IngestResult ingest_csv(const std::string& path, AnnotationStore& store) {
    std::string text;
    try {
        text = util::read_file(path);
    } catch (const std::exception& e) {
        throw AnnotateError(e.what());
    }

    static constexpr std::string_view kHeader = "identity,address,source,confidence,origin";

    // Validate everything before touching the store, so a malformed row
    // cannot leave a half-applied file behind.
    std::vector<std::pair<std::size_t, Annotation>> rows;
    std::size_t lineno = 0;
    for (std::string_view rest = text; !rest.empty();) {
        std::size_t eol = rest.find('\n');
        std::string line(rest.substr(0, eol));
        rest = (eol == std::string_view::npos) ? std::string_view{} : rest.substr(eol + 1);
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == kHeader) continue;

        auto fields = util::split(line, ',');
        if (fields.size() != 5) {
            throw AnnotateError(path + " row " + std::to_string(lineno) +
                                ": expected 5 fields, got " + std::to_string(fields.size()));
        }
        Annotation a;
        a.identity = fields[0];
        a.address = fields[1];
        a.origin = fields[4];
        if (a.identity.empty()) {
            throw AnnotateError(path + " row " + std::to_string(lineno) + ": empty identity");
        }
        try {
            a.source = source_from_string(fields[2]);
        } catch (const AnnotateError& e) {
            throw AnnotateError(path + " row " + std::to_string(lineno) + ": " + e.what());
        }
        std::size_t consumed = 0;
        try {
            a.confidence = std::stod(fields[3], &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != fields[3].size() || !(a.confidence > 0.0) || a.confidence > 1.0) {
            throw AnnotateError(path + " row " + std::to_string(lineno) +
                                ": bad confidence '" + fields[3] + "'");
        }
        if ((a.source == Source::scraped || a.source == Source::manual) &&
            a.confidence != 1.0) {
            throw AnnotateError(path + " row " + std::to_string(lineno) +
                                ": definitive sources require confidence 1");
        }
        rows.emplace_back(lineno, std::move(a));
    }

    IngestResult result;
    for (auto& [row, a] : rows) {
        auto decoded = addrcodec::validate(a.address);
        if (!decoded.ok()) {
            result.rejected.push_back(
                {row, a.address + ": " + std::string(addrcodec::to_string(decoded.error))});
            continue;
        }
        switch (store.add(std::move(a))) {
            case AddOutcome::inserted: ++result.inserted; break;
            case AddOutcome::replaced: ++result.replaced; break;
            case AddOutcome::kept: ++result.kept; break;
        }
    }
    return result;
}

std::string store_to_csv(const AnnotationStore& store) {
    std::string out = "identity,address,source,confidence,origin\n";
    char buf[64];
    for (const auto& a : store.all()) {
        std::snprintf(buf, sizeof buf, "%.12g", a.confidence);
        out += a.identity;
        out += ',';
        out += a.address;
        out += ',';
        out += to_string(a.source);
        out += ',';
        out += buf;
        out += ',';
        out += a.origin;
        out += '\n';
    }
    return out;
}

void save_store_csv(const std::string& path, const AnnotationStore& store) {
    util::write_file(path, store_to_csv(store));
}

std::map<std::string, std::vector<Annotation>> annotate_entities(
    const entity::EntityPartition& partition, const AnnotationStore& store) {
    std::map<std::string, std::vector<Annotation>> out;
    for (const auto& a : store.all()) {
        out[partition.entity_of(a.address)].push_back(a);
    }
    for (auto& [ent, list] : out) {
        std::sort(list.begin(), list.end(), [](const Annotation& a, const Annotation& b) {
            return std::tie(a.identity, a.address) < std::tie(b.identity, b.address);
        });
    }
    return out;
}

namespace {

using Adjacency =
    std::unordered_map<std::string, std::vector<std::pair<std::string, std::string>>>;

Adjacency build_adjacency(const txgraph::Graph& graph, bool directed) {
    Adjacency adj;
    for (const auto& e : graph.edges) {
        adj[e.src].emplace_back(e.dst, e.txid);
        if (!directed && e.src != e.dst) adj[e.dst].emplace_back(e.src, e.txid);
    }
    for (auto& [node, neighbors] : adj) {
        std::sort(neighbors.begin(), neighbors.end());
    }
    return adj;
}

struct BfsHit {
    std::size_t dist = 0;
    std::string prev;
    std::string txid;
};

// Sorted adjacency plus FIFO order make the parent tree, and with it every
// witness path, deterministic.
std::unordered_map<std::string, BfsHit> bfs(const Adjacency& adj, const std::string& start,
                                            std::size_t max_depth) {
    std::unordered_map<std::string, BfsHit> hit;
    hit[start] = {0, "", ""};
    std::deque<std::string> queue{start};
    while (!queue.empty()) {
        std::string cur = std::move(queue.front());
        queue.pop_front();
        std::size_t d = hit[cur].dist;
        if (d >= max_depth) continue;
        auto it = adj.find(cur);
        if (it == adj.end()) continue;
        for (const auto& [nb, txid] : it->second) {
            if (hit.count(nb)) continue;
            hit[nb] = {d + 1, cur, txid};
            queue.push_back(nb);
        }
    }
    return hit;
}

}  // namespace

std::vector<LinkReport> khop(const txgraph::Graph& graph, const std::set<std::string>& from,
                             const std::set<std::string>& to, std::size_t k,
                             const KhopOptions& options) {
    Adjacency adj = build_adjacency(graph, options.directed);

    std::vector<LinkReport> reports;
    for (const auto& src : from) {
        auto hit = bfs(adj, src, k);
        for (const auto& dst : to) {
            auto it = hit.find(dst);
            if (it == hit.end() || it->second.dist > k) continue;
            LinkReport r;
            r.source = src;
            r.source_entity = src;
            r.target = dst;
            r.hops = it->second.dist;
            for (std::string cur = dst; cur != src;) {
                const BfsHit& step = hit.at(cur);
                r.path.push_back({cur, step.txid});
                cur = step.prev;
            }
            std::reverse(r.path.begin(), r.path.end());
            reports.push_back(std::move(r));
        }
    }
    return reports;
}

std::vector<LinkReport> link_annotated(const txgraph::Graph& entity_graph,
                                       const entity::EntityPartition& partition,
                                       const AnnotationStore& store,
                                       const std::set<std::string>& to, std::size_t k,
                                       const KhopOptions& options) {
    std::map<std::string, std::set<std::string>> identity_entities;
    std::set<std::string> from;
    for (const auto& a : store.all()) {
        std::string ent = partition.entity_of(a.address);
        identity_entities[a.identity].insert(ent);
        from.insert(ent);
    }

    std::map<std::pair<std::string, std::string>, LinkReport> by_entity;
    for (auto& r : khop(entity_graph, from, to, k, options)) {
        by_entity.emplace(std::make_pair(r.source, r.target), std::move(r));
    }

    std::map<std::pair<std::string, std::string>, LinkReport> best;
    for (const auto& [identity, entities] : identity_entities) {
        for (const auto& ent : entities) {
            for (const auto& dst : to) {
                auto it = by_entity.find({ent, dst});
                if (it == by_entity.end()) continue;
                LinkReport r = it->second;
                r.source = identity;
                auto key = std::make_pair(identity, r.target);
                auto [slot, inserted] = best.emplace(key, r);
                if (!inserted && r.hops < slot->second.hops) slot->second = std::move(r);
            }
        }
    }

    std::vector<LinkReport> reports;
    reports.reserve(best.size());
    for (auto& [key, r] : best) reports.push_back(std::move(r));
    return reports;
}

std::string format_path(const LinkReport& report) {
    std::string out = report.source_entity;
    for (const auto& step : report.path) {
        out += "-(";
        out += step.txid;
        out += ")->";
        out += step.entity;
    }
    return out;
}

std::string links_to_tsv(std::span<const LinkReport> reports) {
    std::string out = "identity\ttarget\thops\tpath\n";
    for (const auto& r : reports) {
        out += r.source;
        out += '\t';
        out += r.target;
        out += '\t';
        out += std::to_string(r.hops);
        out += '\t';
        out += format_path(r);
        out += '\n';
    }
    return out;
}

void save_links(const std::string& path, std::span<const LinkReport> reports) {
    util::write_file(path, links_to_tsv(reports));
}

std::vector<FanInReport> detect_fanin(const txgraph::Graph& graph,
                                      std::size_t min_parallel_edges, bool equal_value) {
    if (min_parallel_edges < 2) {
        throw std::invalid_argument("min_parallel_edges must be at least 2");
    }

    std::map<std::string, std::vector<const txgraph::Edge*>> incoming;
    for (const auto& e : graph.edges) {
        if (e.src == e.dst) continue;  // intra-entity churn is not fan-in
        incoming[e.dst].push_back(&e);
    }

    std::vector<FanInReport> reports;
    for (const auto& [target, edges] : incoming) {
        FanInReport r;
        r.target = target;
        if (equal_value) {
            std::map<std::int64_t, std::size_t> by_value;
            for (const auto* e : edges) ++by_value[e->value];
            std::int64_t modal = 0;
            std::size_t best = 0;
            for (const auto& [value, count] : by_value) {
                if (count > best) {  // ascending keys, so ties keep the smallest
                    best = count;
                    modal = value;
                }
            }
            r.value = modal;
            std::set<std::string> sources;
            for (const auto* e : edges) {
                if (e->value != modal) continue;
                ++r.edge_count;
                sources.insert(e->src);
            }
            r.source_count = sources.size();
        } else {
            r.edge_count = edges.size();
            std::set<std::string> sources;
            for (const auto* e : edges) sources.insert(e->src);
            r.source_count = sources.size();
        }
        if (r.edge_count >= min_parallel_edges) reports.push_back(std::move(r));
    }

    std::sort(reports.begin(), reports.end(), [](const FanInReport& a, const FanInReport& b) {
        if (a.edge_count != b.edge_count) return a.edge_count > b.edge_count;
        return a.target < b.target;
    });
    return reports;
}

std::string fanin_to_tsv(std::span<const FanInReport> reports) {
    std::string out = "target\tsource_count\tedge_count\tvalue\n";
    for (const auto& r : reports) {
        out += r.target;
        out += '\t';
        out += std::to_string(r.source_count);
        out += '\t';
        out += std::to_string(r.edge_count);
        out += '\t';
        out += std::to_string(r.value);
        out += '\n';
    }
    return out;
}

void save_fanin(const std::string& path, std::span<const FanInReport> reports) {
    util::write_file(path, fanin_to_tsv(reports));
}

}  // namespace chaintrace::annotate
