#pragma once

#include "coevo/baselines.hpp"
#include "coevo/coevolution.hpp"
#include "coevo/market_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coevo {

/// Bad configuration text or value. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridConfig {
    std::size_t strikes = 8;
    std::size_t maturities = 5;
    double spot = 100.0;
    double rate = 0.0;
    double lm_lo = -0.3;
    double lm_hi = 0.2;
    double tau_lo = 0.05;
    double tau_hi = 1.0;

    SurfaceGrid grid() const { return SurfaceGrid::synthetic(spot, strikes, maturities, lm_lo, lm_hi, tau_lo, tau_hi); }
    MarketContext context() const { return {spot, RateCurve::flat(rate)}; }
};

struct TttConfig {
    std::size_t trials = 20;
    std::size_t max_generations = 500;
};

struct OverfitSection {
    std::size_t n_lhs = 2000;
    std::size_t n_test = 500;
    std::size_t generations = 50;
    std::size_t epochs = 50;
};

struct ArchstatsConfig {
    std::vector<std::size_t> checkpoints{20, 40, 60, 80, 100};
    std::size_t samples = 5;
};

struct MarketConfig {
    std::filesystem::path chain;
    /// Empty: the built-in Treasury snapshot.
    std::filesystem::path rates;
    /// Optional ground-truth parameters (JSON) for synthetic-as-real validation.
    std::filesystem::path truth;
    double spot = 4500.0;
    std::vector<std::size_t> checkpoints{20, 40, 60, 80, 100};
    std::size_t lhs_size = 1000;
    std::size_t lhs_epochs = 50;
    /// Expiry (days) of the strike slice; 0 picks the one with the most quotes.
    int slice_days = 0;
    QuoteFilter filter;
};

/// Every knob of every command. Built-in defaults, then the config file, then flags.
struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::filesystem::path out = "out";
    /// Run length of the command's evolutionary runs. Unset: each command's own default
    /// (coevo.generations for convergence, the last checkpoint for archstats and calibrate-real,
    /// ttt.max_generations and overfit.generations for those commands).
    std::optional<std::size_t> generations;
    /// Synthetic targets for convergence and archstats.
    std::size_t targets = 10;
    GridConfig grid;
    ParamBox box;
    QuadratureSpec quad;
    CoevoConfig coevo;
    LbfgsConfig lbfgs;
    TttConfig ttt;
    OverfitSection overfit;
    ArchstatsConfig archstats;
    MarketConfig market;
    /// Parameters for `price` and `make-chain`.
    HestonParams params{2.0, 0.05, 0.6, -0.7, 0.03};

    /// Throws ConfigError on any out-of-range value.
    void validate() const;
};

/// INI text with sections [experiment], [grid], [quadrature], [ga], [neuro], [training],
/// [injection], [lbfgs], [ttt], [overfit], [archstats], [market], [params], [box].
/// Keys not listed for a section, and values that do not parse, raise ConfigError.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// The resolved configuration as JSON (used for the output sidecars).
std::string config_to_json(const ExperimentConfig& cfg);

/// "8x5" -> {8, 5}.
std::pair<std::size_t, std::size_t> parse_grid_spec(const std::string& s);

/// {"kappa": .., "lambda": .., "sigma": .., "rho": .., "v0": ..}
HestonParams params_from_json(const std::string& text);
std::string params_to_json(const HestonParams& p);

}  // namespace coevo
