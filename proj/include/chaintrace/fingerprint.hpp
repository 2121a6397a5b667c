#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaintrace/blockparse.hpp"

namespace chaintrace::fingerprint {

class RateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Daily USD/BTC closes keyed by UTC date string "YYYY-MM-DD". A missing
/// date is an error, never silently interpolated.
class RateTable {
public:
    void set(const std::string& date, double usd_per_btc);
    /// Throws RateError if the date is absent.
    double at(const std::string& date) const;
    bool has(const std::string& date) const;
    std::size_t size() const { return rates_.size(); }

    /// CSV `date,usd_per_btc` with an optional header row. Rates must be
    /// positive; bad rows raise RateError with the line number.
    static RateTable load_csv(const std::string& path);

private:
    std::map<std::string, double> rates_;
};

/// An imprecise recollection: "around this time, about this many dollars".
struct Query {
    std::int64_t t_center = 0;  // epoch seconds
    std::int64_t t_radius = 0;  // seconds
    double usd_center = 0.0;
    double usd_radius = 0.0;
};

struct BtcWindow {
    double lo = 0.0;
    double hi = 0.0;
};

/// [ (usd_center - usd_radius)/rate, (usd_center + usd_radius)/rate ],
/// closed; lo clamps at 0 when the radius exceeds the center.
BtcWindow usd_window_to_btc(double usd_center, double usd_radius, double usd_per_btc);
/// Same, with the rate looked up for the given UTC date.
BtcWindow usd_window_to_btc(double usd_center, double usd_radius, const std::string& date,
                            const RateTable& rates);

struct Candidate {
    std::string txid;
    std::size_t vout = 0;
    double btc = 0.0;
    std::int64_t time = 0;

    bool operator==(const Candidate&) const = default;
};

struct MatchSet {
    std::vector<Candidate> candidates;  // sorted by (time, txid, vout)
    double probability = 0.0;           // 1/|candidates|, or 0 when empty
    std::size_t skipped_records = 0;    // records without a rate for their day
};

/// Scans records for outputs matching the query: the record's timestamp must
/// lie within t_center ± t_radius (closed) and the output value, in BTC, must
/// lie in the USD window converted at that record's own UTC-day rate.
MatchSet match(const Query& query, std::span<const blockparse::TxRecord> records,
               const RateTable& rates);

struct AmbiguityGrid {
    std::vector<std::int64_t> time_radii;
    std::vector<double> usd_radii;
    /// cells[i][j]: mean number of outputs matching an output's implied query
    /// at time radius i, USD radius j. Self-matches included, so >= 1.
    std::vector<std::vector<double>> cells;
    std::size_t skipped_records = 0;
};

/// For every output, poses the query (its own time/value re-expressed in
/// USD) and counts matching outputs; each cell is the mean count over all
/// outputs with a usable rate.
AmbiguityGrid ambiguity(std::span<const blockparse::TxRecord> records,
                        std::span<const std::int64_t> time_radii,
                        std::span<const double> usd_radii, const RateTable& rates);

/// TSV: header row `time_radius` then one column per USD radius; one row per
/// time radius; cells formatted %.6f.
void save_grid(const std::string& path, const AmbiguityGrid& grid);
std::string grid_to_tsv(const AmbiguityGrid& grid);

inline constexpr double kSatoshisPerBtc = 1e8;

}  // namespace chaintrace::fingerprint
