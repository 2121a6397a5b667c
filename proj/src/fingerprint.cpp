#include "chaintrace/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "chaintrace/util.hpp"

namespace chaintrace::fingerprint {

void RateTable::set(const std::string& date, double usd_per_btc) {
    if (!(usd_per_btc > 0.0)) throw RateError("rate for " + date + " must be positive");
    rates_[date] = usd_per_btc;
}

double RateTable::at(const std::string& date) const {
    auto it = rates_.find(date);
    if (it == rates_.end()) throw RateError("no rate for date " + date);
    return it->second;
}

bool RateTable::has(const std::string& date) const { return rates_.count(date) != 0; }

namespace {

bool looks_like_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    return true;
}

}  // namespace

RateTable RateTable::load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RateError("cannot open " + path);

    RateTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("date", 0) == 0) continue;  // header row
        auto fields = util::split(line, ',');
        if (fields.size() != 2 || !looks_like_date(fields[0])) {
            throw RateError(path + " line " + std::to_string(lineno) +
                            ": expected `YYYY-MM-DD,usd_per_btc`");
        }
        double rate = 0.0;
        std::size_t consumed = 0;
        try {
            rate = std::stod(fields[1], &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != fields[1].size() || !(rate > 0.0)) {
            throw RateError(path + " line " + std::to_string(lineno) + ": bad rate '" +
                            fields[1] + "'");
        }
        table.set(fields[0], rate);
    }
    return table;
}

BtcWindow usd_window_to_btc(double usd_center, double usd_radius, double usd_per_btc) {
    if (usd_radius < 0.0) throw std::invalid_argument("usd_radius must be non-negative");
    double lo = (usd_center - usd_radius) / usd_per_btc;
    double hi = (usd_center + usd_radius) / usd_per_btc;
    if (lo < 0.0) lo = 0.0;
    return {lo, hi};
}

BtcWindow usd_window_to_btc(double usd_center, double usd_radius, const std::string& date,
                            const RateTable& rates) {
    return usd_window_to_btc(usd_center, usd_radius, rates.at(date));
}

MatchSet match(const Query& query, std::span<const blockparse::TxRecord> records,
               const RateTable& rates) {
    if (query.t_radius < 0) throw std::invalid_argument("t_radius must be non-negative");
    MatchSet result;
    for (const auto& rec : records) {
        if (std::llabs(rec.time - query.t_center) > query.t_radius) continue;
        std::string date = util::utc_date(rec.time);
        if (!rates.has(date)) {
            // In the time window but unusable: surfaced, not silently dropped.
            ++result.skipped_records;
            continue;
        }
        BtcWindow window = usd_window_to_btc(query.usd_center, query.usd_radius, date, rates);
        for (std::size_t vout = 0; vout < rec.out.size(); ++vout) {
            double btc = static_cast<double>(rec.out[vout].second) / kSatoshisPerBtc;
            if (btc >= window.lo && btc <= window.hi) {
                result.candidates.push_back({rec.txid, vout, btc, rec.time});
            }
        }
    }
    std::sort(result.candidates.begin(), result.candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.time != b.time) return a.time < b.time;
                  if (a.txid != b.txid) return a.txid < b.txid;
                  return a.vout < b.vout;
              });
    result.probability =
        result.candidates.empty() ? 0.0 : 1.0 / static_cast<double>(result.candidates.size());
    return result;
}

namespace {

struct OutputPoint {
    std::int64_t time = 0;
    double btc = 0.0;
    double rate = 0.0;  // that record's own UTC-day rate
};

}  // namespace

AmbiguityGrid ambiguity(std::span<const blockparse::TxRecord> records,
                        std::span<const std::int64_t> time_radii,
                        std::span<const double> usd_radii, const RateTable& rates) {
    AmbiguityGrid grid;
    grid.time_radii.assign(time_radii.begin(), time_radii.end());
    grid.usd_radii.assign(usd_radii.begin(), usd_radii.end());

    std::vector<OutputPoint> points;
    for (const auto& rec : records) {
        std::string date = util::utc_date(rec.time);
        if (!rates.has(date)) {
            ++grid.skipped_records;
            continue;
        }
        double rate = rates.at(date);
        for (const auto& [addr, value] : rec.out) {
            points.push_back({rec.time, static_cast<double>(value) / kSatoshisPerBtc, rate});
        }
    }

    std::sort(points.begin(), points.end(),
              [](const OutputPoint& a, const OutputPoint& b) { return a.time < b.time; });

    grid.cells.assign(grid.time_radii.size(),
                      std::vector<double>(grid.usd_radii.size(), 0.0));
    if (points.empty()) return grid;

    for (std::size_t ti = 0; ti < grid.time_radii.size(); ++ti) {
        const std::int64_t tr = grid.time_radii[ti];
        for (std::size_t ui = 0; ui < grid.usd_radii.size(); ++ui) {
            const double ur = grid.usd_radii[ui];
            std::uint64_t total = 0;
            for (const auto& o : points) {
                const double usd_center = o.btc * o.rate;
                // Binary-search the closed time window, then test values
                // with the same division-derived window match() uses.
                auto lo = std::lower_bound(points.begin(), points.end(), o.time - tr,
                                           [](const OutputPoint& p, std::int64_t t) {
                                               return p.time < t;
                                           });
                auto hi = std::upper_bound(points.begin(), points.end(), o.time + tr,
                                           [](std::int64_t t, const OutputPoint& p) {
                                               return t < p.time;
                                           });
                for (auto it = lo; it != hi; ++it) {
                    // An output always matches itself, even when usd->btc
                    // round-trip rounding would put it a ulp outside its
                    // own zero-radius window.
                    if (&*it == &o) {
                        ++total;
                        continue;
                    }
                    BtcWindow window = usd_window_to_btc(usd_center, ur, it->rate);
                    if (it->btc >= window.lo && it->btc <= window.hi) ++total;
                }
            }
            grid.cells[ti][ui] =
                static_cast<double>(total) / static_cast<double>(points.size());
        }
    }
    return grid;
}

std::string grid_to_tsv(const AmbiguityGrid& grid) {
    std::string out = "time_radius";
    char buf[64];
    for (double ur : grid.usd_radii) {
        std::snprintf(buf, sizeof buf, "\tusd_%g", ur);
        out += buf;
    }
    out += '\n';
    for (std::size_t ti = 0; ti < grid.time_radii.size(); ++ti) {
        out += std::to_string(grid.time_radii[ti]);
        for (std::size_t ui = 0; ui < grid.usd_radii.size(); ++ui) {
            std::snprintf(buf, sizeof buf, "\t%.6f", grid.cells[ti][ui]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void save_grid(const std::string& path, const AmbiguityGrid& grid) {
    util::write_file(path, grid_to_tsv(grid));
}

}  // namespace chaintrace::fingerprint
