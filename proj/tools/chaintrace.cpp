// Pipeline driver. Every stage is a pure function of its input files and
// flags: reruns produce byte-identical outputs. Logs go to stderr, data only
// to the declared output paths. Exit codes: 0 success, 1 runtime failure,
// 2 bad configuration or unknown subcommand.
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chaintrace/annotate.hpp"
#include "chaintrace/blockparse.hpp"
#include "chaintrace/entity.hpp"
#include "chaintrace/fingerprint.hpp"
#include "chaintrace/fixture.hpp"
#include "chaintrace/rank.hpp"
#include "chaintrace/txgraph.hpp"
#include "chaintrace/util.hpp"

namespace {

using namespace chaintrace;

/// Flag values that fail semantic validation (unparseable times, impossible
/// parameter ranges) exit 2, unlike runtime failures which exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::int64_t config_time(const std::string& text, const char* flag) {
    try {
        return util::parse_time(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string(flag) + ": " + e.what());
    }
}

std::int64_t config_duration(const std::string& text, const char* flag) {
    try {
        return util::parse_duration(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string(flag) + ": " + e.what());
    }
}

double config_double(const std::string& text, const char* flag) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(flag) + ": not a number: \"" + text + "\"");
    }
}

std::vector<std::int64_t> parse_duration_list(const std::string& text, const char* flag) {
    std::vector<std::int64_t> out;
    for (const auto& piece : util::split(text, ',')) out.push_back(config_duration(piece, flag));
    if (out.empty()) throw ConfigError(std::string(flag) + ": empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const auto& piece : util::split(text, ',')) out.push_back(config_double(piece, flag));
    return out;
}

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Stage implementations. Each reads only its declared inputs and writes only
// its declared outputs; progress goes to stderr.

struct ParseArgs {
    std::string blocks, out;
    std::size_t limit = 0;
};

void run_parse(const ParseArgs& a) {
    auto blocks = blockparse::parse_block_dir(a.blocks, a.limit);
    auto resolved = blockparse::resolve(blocks);
    blockparse::write_records(a.out, resolved.records);
    std::cerr << "parse: " << blocks.size() << " blocks, " << resolved.records.size()
              << " transactions -> " << a.out << "\n";
}

struct BuildGraphArgs {
    std::string records, out, from, to;
    std::int64_t min_value = 0;
};

void run_build_graph(const BuildGraphArgs& a) {
    txgraph::BuildOptions options;
    if (!a.from.empty()) options.window.start = config_time(a.from, "--from");
    if (!a.to.empty()) options.window.end = config_time(a.to, "--to");
    if (options.window.start >= options.window.end)
        throw ConfigError("--from must precede --to");
    if (a.min_value < 0) throw ConfigError("--min-value must be non-negative");
    options.min_value = a.min_value;

    auto records = blockparse::read_records(a.records);
    auto graph = txgraph::build(records, options);
    txgraph::save(a.out, graph);
    auto s = txgraph::stats(graph);
    std::cerr << "build-graph: " << s.node_count << " nodes, " << s.edge_count
              << " edges from " << s.tx_count << " transactions -> " << a.out << "\n";
}

struct ClusterArgs {
    std::string records, out;
};

void run_cluster(const ClusterArgs& a) {
    auto records = blockparse::read_records(a.records);
    auto partition = entity::cluster(records);
    entity::save(a.out, partition);
    std::cerr << "cluster: " << partition.size() << " addresses -> " << a.out << "\n";
}

struct ProjectArgs {
    std::string graph, partition, out;
};

void run_project(const ProjectArgs& a) {
    auto graph = txgraph::load(a.graph);
    auto partition = entity::load(a.partition);
    auto projected = entity::project(graph, partition);
    txgraph::save(a.out, projected);
    std::cerr << "project: " << graph.nodes.size() << " addresses -> "
              << projected.nodes.size() << " entities -> " << a.out << "\n";
}

struct RankArgs {
    std::string graph, out, weight = "multiplicity";
    double damping = 0.85;
    double tol = 1e-10;
    int max_iter = 200;
    std::size_t top = 0;
};

void run_rank(const RankArgs& a) {
    rank::RankOptions options;
    if (a.damping <= 0.0 || a.damping >= 1.0) throw ConfigError("--damping must be in (0, 1)");
    if (a.tol <= 0.0) throw ConfigError("--tol must be positive");
    if (a.max_iter <= 0) throw ConfigError("--max-iter must be positive");
    options.damping = a.damping;
    options.tol = a.tol;
    options.max_iter = a.max_iter;
    if (a.weight == "multiplicity") {
        options.weight = rank::EdgeWeight::multiplicity;
    } else if (a.weight == "value") {
        options.weight = rank::EdgeWeight::value;
    } else {
        throw ConfigError("--weight must be multiplicity or value");
    }

    auto graph = txgraph::load(a.graph);
    auto result = rank::pagerank(graph, options);
    rank::save_ranks(a.out, result, a.top);
    if (!result.converged)
        std::cerr << "rank: warning: not converged after " << result.iterations
                  << " iterations (residual " << result.residual << ")\n";
    std::cerr << "rank: " << result.scores.size() << " nodes in " << result.iterations
              << " iterations -> " << a.out << "\n";
}

struct FingerprintArgs {
    std::string records, rates, time, out;
    std::string time_radius = "300s";
    double usd = 0.0;
    double usd_radius = 1.0;
};

void run_fingerprint(const FingerprintArgs& a) {
    fingerprint::Query query;
    query.t_center = config_time(a.time, "--time");
    query.t_radius = config_duration(a.time_radius, "--time-radius");
    query.usd_center = a.usd;
    query.usd_radius = a.usd_radius;
    if (query.usd_radius < 0) throw ConfigError("--usd-radius must be non-negative");

    auto records = blockparse::read_records(a.records);
    auto rates = fingerprint::RateTable::load_csv(a.rates);
    auto matched = fingerprint::match(query, records, rates);

    std::string tsv = fmt("# candidates=%zu probability=%.12g skipped=%zu\n",
                          matched.candidates.size(), matched.probability,
                          matched.skipped_records);
    tsv += "txid\tvout\tbtc\ttime\n";
    for (const auto& c : matched.candidates) {
        tsv += c.txid;
        tsv += fmt("\t%zu\t%.8f\t%" PRId64 "\n", c.vout, c.btc, c.time);
    }
    util::write_file(a.out, tsv);
    std::cerr << "fingerprint: " << matched.candidates.size() << " candidates, probability "
              << matched.probability << ", " << matched.skipped_records
              << " records without a rate -> " << a.out << "\n";
}

struct AmbiguityArgs {
    std::string records, rates, out;
    std::string time_radii = "60,300,900";
    std::string usd_radii = "0.5,1,5";
};

void run_ambiguity(const AmbiguityArgs& a) {
    auto time_radii = parse_duration_list(a.time_radii, "--time-radii");
    auto usd_radii = parse_double_list(a.usd_radii, "--usd-radii");
    auto records = blockparse::read_records(a.records);
    auto rates = fingerprint::RateTable::load_csv(a.rates);
    auto grid = fingerprint::ambiguity(records, time_radii, usd_radii, rates);
    fingerprint::save_grid(a.out, grid);
    std::cerr << "ambiguity: " << time_radii.size() << "x" << usd_radii.size() << " grid, "
              << grid.skipped_records << " records without a rate -> " << a.out << "\n";
}

struct HarvestArgs {
    std::string corpus, out;
};

void run_harvest(const HarvestArgs& a) {
    auto result = annotate::harvest(a.corpus);
    // Origin records the corpus directory's name, not the path as typed, so
    // harvesting the same corpus from different locations gives identical
    // output bytes.
    std::filesystem::path corpus_path(a.corpus);
    if (!corpus_path.has_filename()) corpus_path = corpus_path.parent_path();
    std::string origin = corpus_path.filename().string();
    if (origin.empty()) origin = a.corpus;
    annotate::AnnotationStore store;
    for (const auto& [identity, address] : result.pairs) {
        store.add({identity, address, annotate::Source::scraped, 1.0, origin});
    }
    annotate::save_store_csv(a.out, store);
    std::cerr << "harvest: " << result.pairs.size() << " identity-address pairs, "
              << result.skipped_files << " files skipped -> " << a.out << "\n";
}

struct IngestArgs {
    std::string csv, annotations, out;
};

void run_ingest(const IngestArgs& a) {
    annotate::AnnotationStore store;
    if (!a.annotations.empty()) annotate::ingest_csv(a.annotations, store);
    auto result = annotate::ingest_csv(a.csv, store);
    annotate::save_store_csv(a.out, store);
    for (const auto& r : result.rejected)
        std::cerr << "ingest: warning: row " << r.row << ": " << r.reason << "\n";
    std::cerr << "ingest: " << result.inserted << " inserted, " << result.replaced
              << " replaced, " << result.kept << " kept, " << result.rejected.size()
              << " rejected -> " << a.out << "\n";
}

struct LinksArgs {
    std::string graph, partition, annotations, to, out;
    std::vector<std::string> from;
    bool from_annotated = false;
    bool directed = false;
    std::size_t k = 2;
};

void run_links(const LinksArgs& a) {
    if (a.from_annotated == !a.from.empty())
        throw ConfigError("pass exactly one of --from-annotated or --from");
    if (a.from_annotated && a.annotations.empty())
        throw ConfigError("--from-annotated requires --annotations");

    auto graph = txgraph::load(a.graph);
    auto partition = entity::load(a.partition);
    // Targets given as member addresses resolve to their entity; entity ids
    // and never-clustered addresses map to themselves.
    std::set<std::string> to{partition.entity_of(a.to)};
    annotate::KhopOptions options{a.directed};

    std::vector<annotate::LinkReport> reports;
    if (a.from_annotated) {
        annotate::AnnotationStore store;
        annotate::ingest_csv(a.annotations, store);
        reports = annotate::link_annotated(graph, partition, store, to, a.k, options);
    } else {
        std::set<std::string> from;
        for (const auto& f : a.from) from.insert(partition.entity_of(f));
        reports = annotate::khop(graph, from, to, a.k, options);
    }
    annotate::save_links(a.out, reports);
    for (const auto& r : reports)
        std::cerr << "links: " << r.source << " -> " << r.target << " in " << r.hops
                  << " hops: " << annotate::format_path(r) << "\n";
    std::cerr << "links: " << reports.size() << " links within " << a.k << " hops -> "
              << a.out << "\n";
}

struct FaninArgs {
    std::string graph, out;
    std::size_t min_edges = 100;
    bool equal_value = false;
};

void run_fanin(const FaninArgs& a) {
    if (a.min_edges < 2) throw ConfigError("--min-edges must be at least 2");
    auto graph = txgraph::load(a.graph);
    auto reports = annotate::detect_fanin(graph, a.min_edges, a.equal_value);
    annotate::save_fanin(a.out, reports);
    std::cerr << "fanin: " << reports.size() << " targets with >= " << a.min_edges
              << " parallel in-edges -> " << a.out << "\n";
}

struct DemoArgs {
    std::string dir;
    std::uint64_t seed = 445;
};

/// End-to-end run on the bundled synthetic world: generate inputs, then
/// parse -> build-graph -> cluster -> project -> rank -> harvest -> fanin ->
/// links, leaving every intermediate file in --dir.
void run_demo(const DemoArgs& a) {
    namespace fs = std::filesystem;
    auto path = [&](const char* name) { return (fs::path(a.dir) / name).string(); };

    auto world = fixture::make_demo_world(a.seed);
    fixture::write_demo_inputs(a.dir, world);
    std::cerr << "demo: wrote synthetic inputs (seed " << a.seed << ") under " << a.dir << "\n";

    run_parse({path("blocks"), path("records.jsonl")});
    BuildGraphArgs build;
    build.records = path("records.jsonl");
    build.out = path("graph.tsv");
    run_build_graph(build);
    run_cluster({path("records.jsonl"), path("partition.tsv")});
    run_project({path("graph.tsv"), path("partition.tsv"), path("ugraph.tsv")});
    run_rank({path("ugraph.tsv"), path("ranks.tsv")});
    run_harvest({path("corpus"), path("annotations.csv")});
    run_fanin({path("ugraph.tsv"), path("fanin.tsv"), 100, true});

    LinksArgs links;
    links.graph = path("ugraph.tsv");
    links.partition = path("partition.tsv");
    links.annotations = path("annotations.csv");
    links.to = world.sr_entity;
    links.out = path("links.tsv");
    links.from_annotated = true;
    run_links(links);
    std::cerr << "demo: marketplace entity " << world.sr_entity << ", seizure sink "
              << world.fbi_address << ", gambling hub " << world.dice_address << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blockchain transaction-graph forensics pipeline"};
    app.require_subcommand(1);

    ParseArgs parse_args;
    auto* parse = app.add_subcommand("parse", "Parse raw block files into resolved records");
    parse->add_option("--blocks", parse_args.blocks, "Directory of blk*.dat files")->required();
    parse->add_option("--out", parse_args.out, "Output records JSONL")->required();
    parse->add_option("--limit", parse_args.limit, "Stop after this many blocks (0 = all)");
    parse->callback([&] { run_parse(parse_args); });

    BuildGraphArgs build_args;
    auto* build = app.add_subcommand("build-graph", "Fold records into the address graph");
    build->add_option("--records", build_args.records, "Records JSONL")->required();
    build->add_option("--from", build_args.from, "Window start (ISO-8601, inclusive)");
    build->add_option("--to", build_args.to, "Window end (ISO-8601, exclusive)");
    build->add_option("--min-value", build_args.min_value, "Drop edges below this many satoshis");
    build->add_option("--out", build_args.out, "Output graph TSV")->required();
    build->callback([&] { run_build_graph(build_args); });

    ClusterArgs cluster_args;
    auto* cluster = app.add_subcommand("cluster", "Group addresses by co-spending");
    cluster->add_option("--records", cluster_args.records, "Records JSONL")->required();
    cluster->add_option("--out", cluster_args.out, "Output partition TSV")->required();
    cluster->callback([&] { run_cluster(cluster_args); });

    ProjectArgs project_args;
    auto* project = app.add_subcommand("project", "Rewrite graph endpoints to entity ids");
    project->add_option("--graph", project_args.graph, "Address graph TSV")->required();
    project->add_option("--partition", project_args.partition, "Partition TSV")->required();
    project->add_option("--out", project_args.out, "Output entity graph TSV")->required();
    project->callback([&] { run_project(project_args); });

    RankArgs rank_args;
    auto* rank_cmd = app.add_subcommand("rank", "Score nodes by stationary visit probability");
    rank_cmd->add_option("--graph", rank_args.graph, "Graph TSV")->required();
    rank_cmd->add_option("--damping", rank_args.damping, "Damping factor");
    rank_cmd->add_option("--tol", rank_args.tol, "L1 convergence tolerance");
    rank_cmd->add_option("--max-iter", rank_args.max_iter, "Iteration cap");
    rank_cmd->add_option("--top", rank_args.top, "Keep only the top N rows (0 = all)");
    rank_cmd->add_option("--weight", rank_args.weight, "Edge weight: multiplicity or value");
    rank_cmd->add_option("--out", rank_args.out, "Output ranks TSV")->required();
    rank_cmd->callback([&] { run_rank(rank_args); });

    FingerprintArgs fp_args;
    auto* fp = app.add_subcommand("fingerprint", "Match a USD purchase window against outputs");
    fp->add_option("--records", fp_args.records, "Records JSONL")->required();
    fp->add_option("--rates", fp_args.rates, "Daily rates CSV")->required();
    fp->add_option("--time", fp_args.time, "Center timestamp (ISO-8601)")->required();
    fp->add_option("--time-radius", fp_args.time_radius, "Time radius (e.g. 300s, 5m)");
    fp->add_option("--usd", fp_args.usd, "Center USD amount")->required();
    fp->add_option("--usd-radius", fp_args.usd_radius, "USD radius");
    fp->add_option("--out", fp_args.out, "Output candidates TSV")->required();
    fp->callback([&] { run_fingerprint(fp_args); });

    AmbiguityArgs amb_args;
    auto* amb = app.add_subcommand("ambiguity", "Mean candidate count over a radius grid");
    amb->add_option("--records", amb_args.records, "Records JSONL")->required();
    amb->add_option("--rates", amb_args.rates, "Daily rates CSV")->required();
    amb->add_option("--time-radii", amb_args.time_radii, "Comma-separated time radii");
    amb->add_option("--usd-radii", amb_args.usd_radii, "Comma-separated USD radii");
    amb->add_option("--out", amb_args.out, "Output grid TSV")->required();
    amb->callback([&] { run_ambiguity(amb_args); });

    HarvestArgs harvest_args;
    auto* harvest = app.add_subcommand("harvest", "Scrape identity-address pairs from a corpus");
    harvest->add_option("--corpus", harvest_args.corpus, "Directory of text/HTML files")->required();
    harvest->add_option("--out", harvest_args.out, "Output annotations CSV")->required();
    harvest->callback([&] { run_harvest(harvest_args); });

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Merge annotation CSV rows into a store");
    ingest->add_option("--csv", ingest_args.csv, "Annotation rows to merge")->required();
    ingest->add_option("--annotations", ingest_args.annotations, "Existing store to start from");
    ingest->add_option("--out", ingest_args.out, "Output annotations CSV")->required();
    ingest->callback([&] { run_ingest(ingest_args); });

    LinksArgs links_args;
    auto* links = app.add_subcommand("links", "Shortest-hop links from sources to a target");
    links->add_option("--graph", links_args.graph, "Graph TSV (usually the entity graph)")->required();
    links->add_option("--partition", links_args.partition, "Partition TSV")->required();
    links->add_option("--annotations", links_args.annotations, "Annotations CSV");
    links->add_flag("--from-annotated", links_args.from_annotated,
                    "Start from every annotated entity");
    links->add_option("--from", links_args.from, "Start node (repeatable)");
    links->add_option("--to", links_args.to, "Target entity or member address")->required();
    links->add_option("--k", links_args.k, "Maximum hops");
    links->add_flag("--directed", links_args.directed, "Follow edge direction only");
    links->add_option("--out", links_args.out, "Output links TSV")->required();
    links->callback([&] { run_links(links_args); });

    FaninArgs fanin_args;
    auto* fanin = app.add_subcommand("fanin", "Find sinks of many parallel in-edges");
    fanin->add_option("--graph", fanin_args.graph, "Graph TSV")->required();
    fanin->add_option("--min-edges", fanin_args.min_edges, "Minimum parallel in-edges");
    fanin->add_flag("--equal-value", fanin_args.equal_value,
                    "Count only the modal in-edge value");
    fanin->add_option("--out", fanin_args.out, "Output report TSV")->required();
    fanin->callback([&] { run_fanin(fanin_args); });

    DemoArgs demo_args;
    auto* demo = app.add_subcommand("demo", "End-to-end run on the bundled synthetic world");
    demo->add_option("--dir", demo_args.dir, "Output directory for inputs and artifacts")->required();
    demo->add_option("--seed", demo_args.seed, "Fixture seed");
    demo->callback([&] { run_demo(demo_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits 0; any parse error is bad config
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
