#pragma once

#include "coevo/params.hpp"

#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coevo {

enum class OptionType { Call, Put };

/// Strike-maturity lattice. Strikes index rows, maturities index columns.
struct SurfaceGrid {
    std::vector<double> strikes;
    std::vector<double> maturities;

    std::size_t n_strikes() const { return strikes.size(); }
    std::size_t n_maturities() const { return maturities.size(); }
    std::size_t size() const { return strikes.size() * maturities.size(); }

    /// Throws std::invalid_argument unless both axes are non-empty, positive and strictly ascending.
    void validate() const;

    /// Strikes evenly spaced in log-moneyness ln(K/S0) over [lm_lo, lm_hi],
    /// maturities evenly spaced over [tau_lo, tau_hi]. Defaults: 8x5 over [-0.3, 0.2] x [0.05, 1].
    static SurfaceGrid synthetic(double spot, std::size_t n_strikes = 8, std::size_t n_maturities = 5,
                                 double lm_lo = -0.3, double lm_hi = 0.2, double tau_lo = 0.05, double tau_hi = 1.0);

    friend bool operator==(const SurfaceGrid&, const SurfaceGrid&) = default;
};

/// Call prices on a grid, stored row-major (strike i, maturity j) -> i * T + j.
struct PriceSurface {
    SurfaceGrid grid;
    std::vector<double> prices;

    double at(std::size_t strike_idx, std::size_t maturity_idx) const {
        return prices[strike_idx * grid.n_maturities() + maturity_idx];
    }
    const std::vector<double>& flatten() const { return prices; }
};

/// Composite Gauss-Legendre settings for the Fourier integrals on (0, u_max].
struct QuadratureSpec {
    double u_max = 200.0;
    std::size_t n_nodes = 64;
    std::size_t n_panels = 4;
    /// When set, every price is recomputed with twice the panels and rejected
    /// as NonConvergent if the two differ by more than 1e-6 * S0.
    bool strict = false;

    void validate() const;
};

enum class PricingErrorKind { Unstable, NonConvergent };

class PricingError : public std::runtime_error {
public:
    PricingError(PricingErrorKind kind, const std::string& what, std::optional<std::size_t> cell = std::nullopt)
        : std::runtime_error(what), kind_(kind), cell_(cell) {}

    PricingErrorKind kind() const { return kind_; }
    /// Flattened cell index for surface-level failures.
    std::optional<std::size_t> cell() const { return cell_; }

private:
    PricingErrorKind kind_;
    std::optional<std::size_t> cell_;
};

/// Characteristic function of ln(S_tau), phi(u) = exp(C(u) + D(u) v0 + iu ln S0),
/// in the branch-cut-safe form (principal square root, g = (b - d)/(b + d), e^{-d tau}).
/// The rate is taken from ctx at tau. Throws PricingError(Unstable) on a non-finite result.
std::complex<double> characteristic_fn(const HestonParams& p, const MarketContext& ctx, double tau,
                                       std::complex<double> u);

/// European call S0*Pi1 - K e^{-r tau} Pi2, floored at max(S0 - K e^{-r tau}, 0) and capped at S0.
double call_price(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                  const QuadratureSpec& quad = {});

/// Put by parity from call_price, floored at max(K e^{-r tau} - S0, 0).
double put_price(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                 const QuadratureSpec& quad = {});

/// Put from the complementary probabilities K e^{-r tau}(1 - Pi2) - S0 (1 - Pi1), unfloored.
/// Independent of the parity route; used for cross-checks.
double put_price_direct(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                        const QuadratureSpec& quad = {});

struct PricingCell {
    double strike = 0.0;
    double tau = 0.0;
};

/// Call prices for arbitrary (K, tau) cells. Cells sharing a maturity reuse one
/// characteristic-function sweep. On failure throws PricingError carrying the cell index.
std::vector<double> price_cells(const HestonParams& p, const MarketContext& ctx, std::span<const PricingCell> cells,
                                const QuadratureSpec& quad = {});

std::vector<PricingCell> grid_cells(const SurfaceGrid& grid);

PriceSurface price_surface(const HestonParams& p, const MarketContext& ctx, const SurfaceGrid& grid,
                           const QuadratureSpec& quad = {});

double black_scholes_call(double spot, double strike, double rate, double tau, double vol);

/// CSV: header row "strike" + maturities, then one row per strike.
std::string surface_to_csv(const PriceSurface& s);
/// JSON record {strikes, maturities, prices_row_major}.
std::string surface_to_json(const PriceSurface& s);
PriceSurface surface_from_json(const std::string& text);

}  // namespace coevo
