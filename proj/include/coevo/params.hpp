#pragma once

#include "coevo/rng.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace coevo {

inline constexpr std::size_t kNumParams = 5;

/// Smallest value allowed for the long-run and initial variance after clamping.
inline constexpr double kVarianceFloor = 1e-6;

/// Heston variance-process parameters (kappa, lambda, sigma, rho, v0).
struct HestonParams {
    double kappa = 1.0;   ///< mean-reversion speed
    double lambda = 0.04; ///< long-run variance
    double sigma = 0.5;   ///< vol-of-vol
    double rho = -0.5;    ///< return/variance correlation
    double v0 = 0.04;     ///< initial variance

    std::array<double, kNumParams> to_array() const { return {kappa, lambda, sigma, rho, v0}; }
    static HestonParams from_array(const std::array<double, kNumParams>& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }
    double operator[](std::size_t i) const { return to_array()[i]; }

    friend bool operator==(const HestonParams&, const HestonParams&) = default;
};

/// Names in genome order, used for CSV headers and config keys.
inline constexpr std::array<const char*, kNumParams> kParamNames = {"kappa", "lambda", "sigma", "rho", "v0"};

/// Model-level validity: kappa, lambda, sigma, v0 > 0 and rho in [-1, 1].
bool is_valid(const HestonParams& p);

/// Component-wise feasible box.
struct ParamBox {
    HestonParams lower{0.005, 0.0, 0.1, -0.95, 0.0};
    HestonParams upper{5.0, 1.0, 1.0, 0.0, 1.0};

    /// Ranges used for the Heston synthetic experiments.
    static ParamBox table_default() { return {}; }

    double range(std::size_t i) const { return upper[i] - lower[i]; }
    std::array<double, kNumParams> ranges() const;

    /// Throws std::invalid_argument unless lower <= upper component-wise.
    /// A degenerate (lower == upper) component is allowed.
    void validate() const;

    bool contains(const HestonParams& p) const;

    /// Affine maps between the box and the unit cube.
    std::array<double, kNumParams> to_unit(const HestonParams& p) const;
    HestonParams from_unit(const std::array<double, kNumParams>& u) const;

    friend bool operator==(const ParamBox&, const ParamBox&) = default;
};

/// Plain-text box file: one `name = [low, high]` line per parameter; `#` starts a comment.
ParamBox parse_param_box(const std::string& text);
ParamBox load_param_box(const std::filesystem::path& path);
std::string format_param_box(const ParamBox& box);

/// Piecewise-linear term structure of continuously compounded rates.
/// Knots are (maturity in years, rate as decimal); flat beyond the end knots.
class RateCurve {
public:
    RateCurve() : knots_{{1.0, 0.0}} {}
    explicit RateCurve(std::vector<std::pair<double, double>> knots);

    static RateCurve flat(double rate) { return RateCurve({{1.0, rate}}); }

    double rate(double tau) const;
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_;
};

struct MarketContext {
    double spot = 100.0;
    RateCurve rate_curve;

    double rate(double tau) const { return rate_curve.rate(tau); }
    void validate() const;
};

/// Clips each component into the box, then floors lambda and v0 at kVarianceFloor.
HestonParams clamp(const HestonParams& p, const ParamBox& box);

/// Feller condition 2*kappa*lambda > sigma^2 (strict). Advisory only.
bool feller_satisfied(const HestonParams& p);

std::vector<HestonParams> sample_uniform(const ParamBox& box, std::size_t n, Rng& rng);

/// Latin hypercube: one point per equal-width stratum in each dimension,
/// strata paired across dimensions by independent random permutations.
std::vector<HestonParams> sample_lhs(const ParamBox& box, std::size_t n, Rng& rng);

std::string to_string(const HestonParams& p);

}  // namespace coevo
