#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "chaintrace/txgraph.hpp"
#include "chaintrace/util.hpp"
#include "testutil.hpp"

using namespace chaintrace;
using namespace chaintrace::txgraph;
using blockparse::TxRecord;

namespace {

TxRecord rec(std::string txid_tag, std::int64_t time,
             std::vector<std::pair<std::string, std::int64_t>> in,
             std::vector<std::pair<std::string, std::int64_t>> out, bool coinbase = false) {
    TxRecord r;
    r.txid = txid_tag + std::string(64 - txid_tag.size(), '0');
    r.time = time;
    r.coinbase = coinbase;
    r.in = std::move(in);
    r.out = std::move(out);
    return r;
}

std::string rand_addr(std::mt19937_64& rng, int pool) {
    return "1Addr" + std::to_string(rng() % static_cast<unsigned>(pool));
}

TxRecord random_record(std::mt19937_64& rng, int addr_pool) {
    TxRecord r;
    std::string txid;
    for (int i = 0; i < 64; ++i) txid += "0123456789abcdef"[rng() % 16];
    r.txid = txid;
    r.time = 1382659200 + static_cast<std::int64_t>(rng() % 86400);
    r.coinbase = rng() % 10 == 0;
    if (r.coinbase) {
        std::int64_t total = 0;
        std::size_t n_out = 1 + rng() % 3;
        for (std::size_t i = 0; i < n_out; ++i) {
            std::int64_t v = static_cast<std::int64_t>(rng() % 5000000000ull);
            r.out.emplace_back(rand_addr(rng, addr_pool), v);
            total += v;
        }
        r.in.emplace_back("coinbase", total);
        return r;
    }
    std::size_t n_in = 1 + rng() % 4;
    std::int64_t in_total = 0;
    for (std::size_t i = 0; i < n_in; ++i) {
        std::int64_t v = 1 + static_cast<std::int64_t>(rng() % 5000000000ull);
        r.in.emplace_back(rand_addr(rng, addr_pool), v);
        in_total += v;
    }
    std::size_t n_out = 1 + rng() % 4;
    std::int64_t remaining = in_total;
    for (std::size_t i = 0; i < n_out && remaining > 0; ++i) {
        std::int64_t v = i + 1 == n_out ? remaining
                                        : static_cast<std::int64_t>(rng() % (remaining + 1));
        r.out.emplace_back(rand_addr(rng, addr_pool), v);
        remaining -= v;
    }
    if (r.out.empty()) r.out.emplace_back(rand_addr(rng, addr_pool), 0);
    return r;
}

}  // namespace

TEST_CASE("single input splits exactly across outputs") {
    auto records = std::vector<TxRecord>{
        rec("aa", 1000, {{"A", 100}}, {{"B", 60}, {"C", 40}}),
    };
    auto g = build(records);
    REQUIRE(g.edges.size() == 2);
    std::multiset<testutil::OracleEdge> got = testutil::as_oracle_multiset(g);
    std::multiset<testutil::OracleEdge> want = {
        {"A", "B", 60, 1000, records[0].txid},
        {"A", "C", 40, 1000, records[0].txid},
    };
    CHECK(got == want);
    CHECK(g.nodes == std::set<std::string>{"A", "B", "C"});
}

TEST_CASE("equal inputs take equal shares") {
    auto records = std::vector<TxRecord>{
        rec("ab", 1000, {{"A", 50}, {"B", 50}}, {{"C", 100}}),
    };
    auto g = build(records);
    std::multiset<testutil::OracleEdge> want = {
        {"A", "C", 50, 1000, records[0].txid},
        {"B", "C", 50, 1000, records[0].txid},
    };
    CHECK(testutil::as_oracle_multiset(g) == want);
}

TEST_CASE("remainder satoshis land on the smallest input address") {
    // 100 sat split over inputs of 3:3:3 → each floor(33.33), remainder 1.
    auto records = std::vector<TxRecord>{
        rec("ac", 1000, {{"B", 3}, {"A", 3}, {"C", 3}}, {{"X", 100}}),
    };
    auto g = build(records);
    std::int64_t total = 0;
    std::int64_t a_share = 0;
    for (const auto& e : g.edges) {
        total += e.value;
        if (e.src == "A") a_share = e.value;
    }
    CHECK(total == 100);
    CHECK(a_share == 34);  // floor(33.3) + 1 remainder
}

TEST_CASE("coinbase records produce no edges") {
    auto records = std::vector<TxRecord>{
        rec("ad", 1000, {{"coinbase", 100}}, {{"A", 100}}, true),
    };
    auto g = build(records);
    CHECK(g.edges.empty());
    CHECK(g.nodes.empty());
}

TEST_CASE("duplicate addresses within a record collapse") {
    // Same address on two input entries: one edge per (in-addr, out-addr).
    auto records = std::vector<TxRecord>{
        rec("ae", 1000, {{"A", 30}, {"A", 70}}, {{"B", 60}, {"B", 40}}),
    };
    auto g = build(records);
    std::multiset<testutil::OracleEdge> want = {
        {"A", "B", 100, 1000, records[0].txid},
    };
    CHECK(testutil::as_oracle_multiset(g) == want);
}

TEST_CASE("window filters by half-open interval") {
    auto records = std::vector<TxRecord>{
        rec("b0", 999, {{"A", 10}}, {{"B", 10}}),
        rec("b1", 1000, {{"A", 10}}, {{"B", 10}}),
        rec("b2", 1999, {{"A", 10}}, {{"B", 10}}),
        rec("b3", 2000, {{"A", 10}}, {{"B", 10}}),
    };
    BuildOptions opt;
    opt.window = {1000, 2000};
    auto g = build(records, opt);
    REQUIRE(g.edges.size() == 2);
    std::set<std::string> txids;
    for (const auto& e : g.edges) txids.insert(e.txid.substr(0, 2));
    CHECK(txids == std::set<std::string>{"b1", "b2"});
}

TEST_CASE("widening the window never removes edges") {
    std::mt19937_64 rng(31337);
    std::vector<TxRecord> records;
    for (int i = 0; i < 150; ++i) records.push_back(random_record(rng, 25));

    std::int64_t day = 1382659200;
    BuildOptions narrow{{day + 3600, day + 7200}, 0};
    BuildOptions wide{{day, day + 86400}, 0};
    auto narrow_edges = testutil::as_oracle_multiset(build(records, narrow));
    auto wide_edges = testutil::as_oracle_multiset(build(records, wide));
    CHECK(std::includes(wide_edges.begin(), wide_edges.end(), narrow_edges.begin(),
                        narrow_edges.end()));
}

TEST_CASE("build matches the quadratic oracle on 200 random records") {
    std::mt19937_64 rng(0xfeed);
    std::vector<TxRecord> records;
    for (int i = 0; i < 200; ++i) records.push_back(random_record(rng, 40));

    auto g = build(records);
    auto want = testutil::oracle_edges(records, std::numeric_limits<long long>::min(),
                                       std::numeric_limits<long long>::max());
    CHECK(testutil::as_oracle_multiset(g) == want);

    // Per-record conservation: edge values sum to output totals.
    std::map<std::string, std::int64_t> edge_sum_by_tx, out_sum_by_tx;
    for (const auto& e : g.edges) edge_sum_by_tx[e.txid] += e.value;
    for (const auto& r : records) {
        if (r.coinbase) continue;
        for (const auto& [a, v] : r.out) out_sum_by_tx[r.txid] += v;
    }
    CHECK(edge_sum_by_tx == out_sum_by_tx);
}

TEST_CASE("build is order-independent") {
    std::mt19937_64 rng(0xbeef);
    std::vector<TxRecord> records;
    for (int i = 0; i < 120; ++i) records.push_back(random_record(rng, 20));

    auto base = build(records);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
        std::shuffle(records.begin(), records.end(), rng);
        auto g = build(records);
        CHECK(g.nodes == base.nodes);
        CHECK(testutil::as_oracle_multiset(g) == testutil::as_oracle_multiset(base));
    }
}

TEST_CASE("min-value drops small edges and orphaned nodes") {
    auto records = std::vector<TxRecord>{
        rec("ca", 1000, {{"A", 100}}, {{"B", 99}, {"C", 1}}),
    };
    BuildOptions opt;
    opt.min_value = 10;
    auto g = build(records, opt);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].dst == "B");
    CHECK(g.nodes == std::set<std::string>{"A", "B"});
}

TEST_CASE("stats counts nodes, edges and distinct txids") {
    CHECK(stats(Graph{}) == GraphStats{0, 0, 0});

    auto records = std::vector<TxRecord>{
        rec("da", 1000, {{"A", 100}}, {{"B", 60}, {"C", 40}}),
    };
    auto g = build(records);
    CHECK(stats(g) == GraphStats{3, 2, 1});

    auto more = std::vector<TxRecord>{
        rec("da", 1000, {{"A", 100}}, {{"B", 60}, {"C", 40}}),
        rec("db", 1001, {{"B", 60}}, {{"C", 60}}),
    };
    CHECK(stats(build(more)) == GraphStats{3, 3, 2});
}

TEST_CASE("graph TSV round-trips and sorts canonically") {
    std::mt19937_64 rng(4242);
    std::vector<TxRecord> records;
    for (int i = 0; i < 300; ++i) records.push_back(random_record(rng, 30));
    auto g = build(records);
    REQUIRE(g.edges.size() > 500);

    testutil::TmpDir tmp("graphio");
    auto path = tmp.file("graph.tsv");
    save(path, g);
    auto loaded = load(path);
    CHECK(loaded.nodes == g.nodes);
    CHECK(testutil::as_oracle_multiset(loaded) == testutil::as_oracle_multiset(g));

    // Canonical bytes: saving the loaded graph reproduces the file.
    CHECK(to_tsv(loaded) == to_tsv(g));

    // Sorted by (timestamp, txid, src, dst).
    auto lines = util::split(to_tsv(g), '\n');
    lines.pop_back();  // trailing newline artifact
    std::vector<std::tuple<std::int64_t, std::string, std::string, std::string>> keys;
    for (const auto& line : lines) {
        auto f = util::split(line, '\t');
        REQUIRE(f.size() == 5);
        keys.emplace_back(std::stoll(f[3]), f[4], f[0], f[1]);
    }
    CHECK(std::is_sorted(keys.begin(), keys.end()));
}

TEST_CASE("empty graph saves to an empty file and loads back") {
    testutil::TmpDir tmp("graphempty");
    auto path = tmp.file("empty.tsv");
    save(path, Graph{});
    auto g = load(path);
    CHECK(g.nodes.empty());
    CHECK(g.edges.empty());
}

TEST_CASE("load rejects malformed lines with line numbers") {
    testutil::TmpDir tmp("graphbad");

    auto try_load = [&](const std::string& content, const std::string& needle) {
        auto path = tmp.file("bad.tsv");
        util::write_file(path, content);
        try {
            (void)load(path);
            FAIL("expected GraphError for: " << content);
        } catch (const GraphError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    try_load("A\tB\t10\n", "line 1");
    try_load("A\tB\t10\t1000\ttx1\nA\tB\tten\t1000\ttx1\n", "line 2");
    try_load("A\tB\t-4\t1000\ttx1\n", "negative");
}

TEST_CASE("adjacency indexes agree with the edge list") {
    auto records = std::vector<TxRecord>{
        rec("ea", 1000, {{"A", 100}}, {{"B", 60}, {"C", 40}}),
        rec("eb", 1001, {{"B", 60}}, {{"C", 60}}),
    };
    auto g = build(records);
    auto out = g.out_index();
    auto in = g.in_index();
    std::size_t out_total = 0, in_total = 0;
    for (const auto& [node, idxs] : out) {
        out_total += idxs.size();
        for (auto i : idxs) CHECK(g.edges[i].src == node);
    }
    for (const auto& [node, idxs] : in) {
        in_total += idxs.size();
        for (auto i : idxs) CHECK(g.edges[i].dst == node);
    }
    CHECK(out_total == g.edges.size());
    CHECK(in_total == g.edges.size());
}
