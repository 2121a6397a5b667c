#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaintrace/entity.hpp"
#include "chaintrace/txgraph.hpp"

namespace chaintrace::annotate {

class AnnotateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Source { scraped, fingerprint, manual };

std::string_view to_string(Source source);
/// Throws AnnotateError on anything but "scraped", "fingerprint", "manual".
Source source_from_string(std::string_view text);

/// One (identity, address) link with its provenance. scraped and manual
/// entries are definitive (confidence exactly 1.0); fingerprint entries are
/// statistical and carry the match probability.
struct Annotation {
    std::string identity;
    std::string address;
    Source source = Source::scraped;
    double confidence = 1.0;  // in (0, 1]
    std::string origin;       // corpus path or query id

    bool operator==(const Annotation&) const = default;
};

enum class AddOutcome { inserted, replaced, kept };

/// Keyed by (identity, address); a duplicate keeps whichever annotation has
/// the higher confidence (ties keep the incumbent). Every stored address is
/// checksum-valid: add() rejects anything else.
class AnnotationStore {
public:
    /// Throws AnnotateError when the address fails validation, confidence is
    /// outside (0, 1], or a scraped/manual entry is not at confidence 1.0.
    AddOutcome add(Annotation annotation);

    /// All annotations, sorted by (identity, address).
    std::vector<Annotation> all() const;
    std::vector<Annotation> for_address(const std::string& address) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::pair<std::string, std::string>, Annotation> entries_;
};

struct HarvestResult {
    /// Deduplicated (identity, address) pairs, sorted.
    std::vector<std::pair<std::string, std::string>> pairs;
    std::size_t skipped_files = 0;  // unreadable entries, warned to stderr-level callers
};

/// Scans every regular file in the corpus directory for address-shaped
/// strings and keeps those that pass checksum validation. A candidate is
/// attributed to the nearest preceding author marker in the same file:
/// either a `Author: NAME` line (key case-insensitive) or an HTML
/// `class="poster_info"` block's first link text. Candidates before any
/// marker fall back to the file's stem as the identity.
HarvestResult harvest(const std::string& corpus_dir);

struct RejectedRow {
    std::size_t row = 0;  // 1-based line number in the CSV
    std::string reason;

    bool operator==(const RejectedRow&) const = default;
};

struct IngestResult {
    std::size_t inserted = 0;
    std::size_t replaced = 0;
    std::size_t kept = 0;
    std::vector<RejectedRow> rejected;  // checksum-invalid addresses, row by row
};

/// CSV rows `identity,address,source,confidence,origin` with an optional
/// header. The whole file is validated structurally before the store is
/// touched (a malformed row throws AnnotateError naming it, leaving the
/// store unchanged); rows that are well-formed but carry an invalid address
/// are rejected individually.
IngestResult ingest_csv(const std::string& path, AnnotationStore& store);

/// `identity,address,source,confidence,origin` with header, sorted rows,
/// confidence printed %.12g.
void save_store_csv(const std::string& path, const AnnotationStore& store);
std::string store_to_csv(const AnnotationStore& store);

/// Attaches each annotation to the entity owning its address (unseen
/// addresses are their own singleton entities). Entities may carry many
/// identities; per-entity lists are sorted by (identity, address).
std::map<std::string, std::vector<Annotation>> annotate_entities(
    const entity::EntityPartition& partition, const AnnotationStore& store);

struct PathStep {
    std::string entity;  // node reached by this step
    std::string txid;    // edge used

    bool operator==(const PathStep&) const = default;
};

/// Evidence that `source` reaches `target` in `hops` edges; `path` holds the
/// steps after the starting node, so path.size() == hops and a 0-hop self
/// link has an empty path. `source` is the reporting label (an identity for
/// annotated queries); `source_entity` is the graph node the walk starts at.
struct LinkReport {
    std::string source;
    std::string source_entity;
    std::string target;
    std::size_t hops = 0;
    std::vector<PathStep> path;

    bool operator==(const LinkReport&) const = default;
};

struct KhopOptions {
    bool directed = false;  // default follows edges both ways
};

/// Shortest-hop search from every `from` node to every `to` node, reporting
/// pairs within k hops with one deterministic witness path each. Reports are
/// ordered by (source, target). Nodes absent from the graph still self-link
/// at 0 hops.
std::vector<LinkReport> khop(const txgraph::Graph& graph, const std::set<std::string>& from,
                             const std::set<std::string>& to, std::size_t k,
                             const KhopOptions& options = {});

/// khop seeded from every annotated entity, with one report per (identity,
/// target entity) pair; an identity annotated on several entities keeps its
/// shortest link. Reports are ordered by (identity, target).
std::vector<LinkReport> link_annotated(const txgraph::Graph& entity_graph,
                                       const entity::EntityPartition& partition,
                                       const AnnotationStore& store,
                                       const std::set<std::string>& to, std::size_t k,
                                       const KhopOptions& options = {});

/// "A-(txid1)->B-(txid2)->C"; a 0-hop path is just the source.
std::string format_path(const LinkReport& report);

/// TSV `identity\ttarget\thops\tpath` with header row.
std::string links_to_tsv(std::span<const LinkReport> reports);
void save_links(const std::string& path, std::span<const LinkReport> reports);

struct FanInReport {
    std::string target;
    std::size_t source_count = 0;  // distinct counted sources
    std::size_t edge_count = 0;    // counted parallel in-edges
    std::int64_t value = -1;       // repeated value in equal-value mode, else -1

    bool operator==(const FanInReport&) const = default;
};

/// Finds nodes receiving at least min_parallel_edges in-edges (self-loops
/// never count). equal_value restricts the tally to the node's most common
/// in-edge value (ties prefer the smallest value), the signature of a
/// repeated fixed-size sweep. Sorted by edge count descending, then target.
/// min_parallel_edges < 2 throws std::invalid_argument.
std::vector<FanInReport> detect_fanin(const txgraph::Graph& graph,
                                      std::size_t min_parallel_edges,
                                      bool equal_value = false);

/// TSV `target\tsource_count\tedge_count\tvalue` with header row.
std::string fanin_to_tsv(std::span<const FanInReport> reports);
void save_fanin(const std::string& path, std::span<const FanInReport> reports);

}  // namespace chaintrace::annotate
