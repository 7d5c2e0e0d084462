#pragma once

#include "coevo/ga.hpp"
#include "coevo/pricing.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace coevo {

struct OptionQuote {
    OptionType type = OptionType::Call;
    double strike = 0.0;
    int expiry_days = 0;
    double mid = 0.0;
};

struct ChainLoadReport {
    std::size_t rows = 0;
    std::size_t kept = 0;
    std::size_t malformed = 0;
    std::size_t crossed = 0;
    std::size_t non_positive = 0;
};

/// CSV with header columns {type, strike, expiry_days, bid, ask} or {type, strike, expiry_days, mid}
/// in any order. Malformed rows, crossed markets (bid > ask) and non-positive mids are skipped and counted.
std::vector<OptionQuote> parse_chain(const std::string& text, ChainLoadReport* report = nullptr);

/// Throws std::runtime_error if the file cannot be read.
std::vector<OptionQuote> load_chain(const std::filesystem::path& path, ChainLoadReport* report = nullptr);

/// Quotes as bid/ask around the mid; the half spread is capped at mid/2 so the bid stays non-negative.
std::string chain_to_csv(const std::vector<OptionQuote>& quotes, double half_spread = 0.0);

/// `rates.csv` text for a curve (inverse of parse_rates_csv).
std::string rates_to_csv(const RateCurve& curve);

struct QuoteFilter {
    int min_days = 3;
    int max_days = 255;
    double min_log_moneyness = -3.31;
    double max_log_moneyness = 0.774;
};

std::vector<OptionQuote> filter_quotes(const std::vector<OptionQuote>& quotes, double spot, const QuoteFilter& f = {});

inline constexpr double kDaysPerYear = 365.0;
inline constexpr double kDaysPerWeek = 7.0;

/// Knots in (weeks, percent), converted to (years, decimal) with ACT/365.
RateCurve curve_from_weeks(const std::vector<std::pair<double, double>>& weeks_percent);

/// U.S. Treasury snapshot used for the SPX experiments.
RateCurve default_treasury_curve();

/// `rates.csv` with header {weeks, rate_percent}.
RateCurve parse_rates_csv(const std::string& text);
RateCurve load_rates(const std::filesystem::path& path);

/// Continuously compounded decimal rate at maturity `tau` years.
inline double rate_at(const RateCurve& curve, double tau) { return curve.rate(tau); }

/// C = P + S0 - K exp(-r tau) and its inverse.
double put_to_call(double put, double spot, double strike, double rate, double tau);
double call_to_put(double call, double spot, double strike, double rate, double tau);

struct MarketTarget {
    CalibrationTarget target;
    MarketContext ctx;
};

/// Calls kept as quoted, puts turned into synthetic calls by parity; tau = expiry_days / 365.
/// Throws std::invalid_argument when no usable quote remains.
MarketTarget assemble_target(const std::vector<OptionQuote>& quotes, double spot, const RateCurve& curve);

/// Scattered call prices resampled onto a rectangular grid: linear in ln K inside each
/// maturity slice, then linear in tau across slices; flat beyond the data in both directions.
std::vector<double> interpolate_to_grid(const CalibrationTarget& target, const SurfaceGrid& grid);

/// Layout of a synthetic option chain priced from known parameters.
struct ChainSpec {
    std::vector<int> expiry_days{7, 14, 30, 45, 60, 91, 120, 150, 182, 210, 240, 255};
    std::vector<double> log_moneyness{-0.35, -0.3, -0.25, -0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2, 0.25};
    /// Strikes are rounded to this increment, mids to `tick`.
    double strike_step = 5.0;
    double tick = 0.01;
    double half_spread = 0.5;
    /// Quotes whose mid falls below this are not listed.
    double min_price = 0.05;
};

/// Out-of-the-money chain (puts below spot, calls at and above) priced from `p`.
std::vector<OptionQuote> synthesize_chain(const HestonParams& p, const MarketContext& ctx, const ChainSpec& spec = {});

/// {spot, cells, maturities, strikes range, rate knots}
std::string target_manifest_json(const MarketTarget& t);

}  // namespace coevo
