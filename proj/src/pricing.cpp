#include "coevo/pricing.hpp"

#include "coevo/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace coevo {

using cd = std::complex<double>;

namespace {

constexpr cd kI{0.0, 1.0};

// log(1 + z) without cancellation for small |z|.
cd log1p_complex(cd z) {
    if (std::abs(z) < 1e-5) return z * (1.0 - z * (0.5 - z / 3.0));
    return std::log(1.0 + z);
}

// Characteristic function of ln(S_tau / S0).
//
// Uses (b - d) = -sigma^2 (iu + u^2) / (b + d) so that nothing is divided by
// sigma^2 except the log term, which is evaluated with log1p.
cd log_return_cf(const HestonParams& p, double rate, double tau, cd u) {
    const double sig2 = p.sigma * p.sigma;
    const cd b = p.kappa - kI * p.rho * p.sigma * u;
    const cd q = kI * u + u * u;
    const cd d = std::sqrt(b * b + sig2 * q);
    const cd b_plus_d = b + d;
    const cd b_minus_d = -sig2 * q / b_plus_d;
    const cd g = b_minus_d / b_plus_d;
    const cd e = std::exp(-d * tau);
    const cd one_minus_ge = 1.0 - g * e;
    const cd D = -q / b_plus_d * (1.0 - e) / one_minus_ge;
    const cd log_ratio = log1p_complex(g * (1.0 - e) / (1.0 - g));
    const cd C = kI * rate * u * tau + p.kappa * p.lambda * (-q * tau / b_plus_d) -
                 2.0 * p.kappa * p.lambda / sig2 * log_ratio;
    return std::exp(C + D * p.v0);
}

// Integrand kernels for one maturity: a1 for Pi1, a2 for Pi2, already
// multiplied by the quadrature weight.
struct MaturitySweep {
    double spot = 0.0;
    double rate = 0.0;
    double tau = 0.0;
    std::vector<double> nodes;
    std::vector<cd> a1;
    std::vector<cd> a2;

    std::pair<double, double> probabilities(double strike) const {
        const double x = std::log(spot / strike);
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double c = std::cos(nodes[j] * x);
            const double s = std::sin(nodes[j] * x);
            s1 += c * a1[j].real() - s * a1[j].imag();
            s2 += c * a2[j].real() - s * a2[j].imag();
        }
        return {0.5 + s1 / std::numbers::pi, 0.5 + s2 / std::numbers::pi};
    }

    double raw_call(double strike) const {
        const auto [pi1, pi2] = probabilities(strike);
        return spot * pi1 - strike * std::exp(-rate * tau) * pi2;
    }
};

MaturitySweep make_sweep(const HestonParams& p, double spot, double rate, double tau, const CompositeRule& rule) {
    MaturitySweep sw;
    sw.spot = spot;
    sw.rate = rate;
    sw.tau = tau;
    sw.nodes = rule.nodes;
    sw.a1.resize(rule.nodes.size());
    sw.a2.resize(rule.nodes.size());
    // phi(-i) = S0 e^{r tau}; the S0 factor cancels against the log-return form.
    const double growth = std::exp(rate * tau);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double u = rule.nodes[j];
        const cd iu = kI * u;
        const cd psi1 = log_return_cf(p, rate, tau, cd(u, -1.0));
        const cd psi2 = log_return_cf(p, rate, tau, cd(u, 0.0));
        sw.a1[j] = rule.weights[j] * psi1 / (iu * growth);
        sw.a2[j] = rule.weights[j] * psi2 / iu;
        if (!std::isfinite(sw.a1[j].real()) || !std::isfinite(sw.a1[j].imag()) || !std::isfinite(sw.a2[j].real()) ||
            !std::isfinite(sw.a2[j].imag())) {
            throw PricingError(PricingErrorKind::Unstable, "non-finite characteristic function at u=" +
                                                               std::to_string(u) + " for " + to_string(p));
        }
    }
    return sw;
}

double bound_call(double raw, double spot, double strike, double rate, double tau) {
    const double intrinsic = std::max(spot - strike * std::exp(-rate * tau), 0.0);
    return std::min(std::max(raw, intrinsic), spot);
}

void check_inputs(const MarketContext& ctx, double tau, double strike) {
    ctx.validate();
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("maturity must be positive");
    if (!(strike > 0.0) || !std::isfinite(strike)) throw std::invalid_argument("strike must be positive");
}

// Prices one maturity group; throws PricingError with the local index of the failing cell.
void price_group(const HestonParams& p, const MarketContext& ctx, double tau, std::span<const PricingCell> cells,
                 std::span<const std::size_t> members, const QuadratureSpec& quad, std::vector<double>& out) {
    const double rate = ctx.rate(tau);
    const auto rule = composite_gauss_legendre(0.0, quad.u_max, quad.n_nodes, quad.n_panels);
    MaturitySweep sweep;
    try {
        sweep = make_sweep(p, ctx.spot, rate, tau, rule);
    } catch (const PricingError& e) {
        throw PricingError(e.kind(), e.what(), members.front());
    }
    std::optional<MaturitySweep> fine;
    if (quad.strict) {
        const auto fine_rule = composite_gauss_legendre(0.0, quad.u_max, quad.n_nodes, 2 * quad.n_panels);
        try {
            fine = make_sweep(p, ctx.spot, rate, tau, fine_rule);
        } catch (const PricingError& e) {
            throw PricingError(e.kind(), e.what(), members.front());
        }
    }
    for (std::size_t idx : members) {
        const double strike = cells[idx].strike;
        const double raw = sweep.raw_call(strike);
        if (!std::isfinite(raw)) {
            throw PricingError(PricingErrorKind::Unstable, "non-finite price for " + to_string(p), idx);
        }
        if (fine) {
            const double raw_fine = fine->raw_call(strike);
            if (!(std::abs(raw_fine - raw) <= 1e-6 * ctx.spot)) {
                throw PricingError(PricingErrorKind::NonConvergent,
                                   "quadrature not converged (panel doubling moved price by " +
                                       std::to_string(std::abs(raw_fine - raw)) + ")",
                                   idx);
            }
        }
        out[idx] = bound_call(raw, ctx.spot, strike, rate, tau);
    }
}

}  // namespace

void SurfaceGrid::validate() const {
    auto check_axis = [](const std::vector<double>& v, const char* name) {
        if (v.empty()) throw std::invalid_argument(std::string(name) + " must be non-empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw std::invalid_argument(std::string(name) + " must be positive");
            if (i > 0 && !(v[i] > v[i - 1])) {
                throw std::invalid_argument(std::string(name) + " must be strictly ascending");
            }
        }
    };
    check_axis(strikes, "strikes");
    check_axis(maturities, "maturities");
}

SurfaceGrid SurfaceGrid::synthetic(double spot, std::size_t n_strikes, std::size_t n_maturities, double lm_lo,
                                   double lm_hi, double tau_lo, double tau_hi) {
    auto linspace = [](double lo, double hi, std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        return v;
    };
    SurfaceGrid g;
    for (double m : linspace(lm_lo, lm_hi, n_strikes)) g.strikes.push_back(spot * std::exp(m));
    g.maturities = linspace(tau_lo, tau_hi, n_maturities);
    g.validate();
    return g;
}

void QuadratureSpec::validate() const {
    if (!(u_max > 0.0)) throw std::invalid_argument("u_max must be positive");
    if (n_nodes < 2) throw std::invalid_argument("n_nodes must be >= 2");
    if (n_panels < 1) throw std::invalid_argument("n_panels must be >= 1");
}

std::complex<double> characteristic_fn(const HestonParams& p, const MarketContext& ctx, double tau,
                                       std::complex<double> u) {
    if (!(tau > 0.0)) throw std::invalid_argument("maturity must be positive");
    const cd phi = log_return_cf(p, ctx.rate(tau), tau, u) * std::exp(kI * u * std::log(ctx.spot));
    if (!std::isfinite(phi.real()) || !std::isfinite(phi.imag())) {
        throw PricingError(PricingErrorKind::Unstable, "non-finite characteristic function for " + to_string(p));
    }
    return phi;
}

double call_price(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                  const QuadratureSpec& quad) {
    check_inputs(ctx, tau, strike);
    const PricingCell cell{strike, tau};
    return price_cells(p, ctx, std::span(&cell, 1), quad).front();
}

double put_price(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                 const QuadratureSpec& quad) {
    const double call = call_price(p, ctx, tau, strike, quad);
    const double df_strike = strike * std::exp(-ctx.rate(tau) * tau);
    return std::max(call - ctx.spot + df_strike, std::max(df_strike - ctx.spot, 0.0));
}

double put_price_direct(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                        const QuadratureSpec& quad) {
    check_inputs(ctx, tau, strike);
    quad.validate();
    const double rate = ctx.rate(tau);
    const auto rule = composite_gauss_legendre(0.0, quad.u_max, quad.n_nodes, quad.n_panels);
    const auto sweep = make_sweep(p, ctx.spot, rate, tau, rule);
    const auto [pi1, pi2] = sweep.probabilities(strike);
    return strike * std::exp(-rate * tau) * (1.0 - pi2) - ctx.spot * (1.0 - pi1);
}

std::vector<double> price_cells(const HestonParams& p, const MarketContext& ctx, std::span<const PricingCell> cells,
                                const QuadratureSpec& quad) {
    quad.validate();
    ctx.validate();
    std::vector<double> out(cells.size(), 0.0);
    // Group by maturity, keeping first-appearance order.
    std::vector<double> taus;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        check_inputs(ctx, cells[i].tau, cells[i].strike);
        const auto it = std::find(taus.begin(), taus.end(), cells[i].tau);
        if (it == taus.end()) {
            taus.push_back(cells[i].tau);
            groups.push_back({i});
        } else {
            groups[static_cast<std::size_t>(it - taus.begin())].push_back(i);
        }
    }
    for (std::size_t g = 0; g < taus.size(); ++g) {
        price_group(p, ctx, taus[g], cells, groups[g], quad, out);
    }
    return out;
}

std::vector<PricingCell> grid_cells(const SurfaceGrid& grid) {
    std::vector<PricingCell> cells;
    cells.reserve(grid.size());
    for (double k : grid.strikes) {
        for (double t : grid.maturities) cells.push_back({k, t});
    }
    return cells;
}

PriceSurface price_surface(const HestonParams& p, const MarketContext& ctx, const SurfaceGrid& grid,
                           const QuadratureSpec& quad) {
    grid.validate();
    const auto cells = grid_cells(grid);
    return PriceSurface{grid, price_cells(p, ctx, cells, quad)};
}

double black_scholes_call(double spot, double strike, double rate, double tau, double vol) {
    const double sd = vol * std::sqrt(tau);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * tau) / sd;
    const double d2 = d1 - sd;
    auto ncdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
    return spot * ncdf(d1) - strike * std::exp(-rate * tau) * ncdf(d2);
}

std::string surface_to_csv(const PriceSurface& s) {
    std::ostringstream out;
    out.precision(17);
    out << "strike";
    for (double t : s.grid.maturities) out << ',' << t;
    out << '\n';
    for (std::size_t i = 0; i < s.grid.n_strikes(); ++i) {
        out << s.grid.strikes[i];
        for (std::size_t j = 0; j < s.grid.n_maturities(); ++j) out << ',' << s.at(i, j);
        out << '\n';
    }
    return out.str();
}

std::string surface_to_json(const PriceSurface& s) {
    nlohmann::json j;
    j["strikes"] = s.grid.strikes;
    j["maturities"] = s.grid.maturities;
    j["prices_row_major"] = s.prices;
    return j.dump(2);
}

PriceSurface surface_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PriceSurface s;
    s.grid.strikes = j.at("strikes").get<std::vector<double>>();
    s.grid.maturities = j.at("maturities").get<std::vector<double>>();
    s.prices = j.at("prices_row_major").get<std::vector<double>>();
    s.grid.validate();
    if (s.prices.size() != s.grid.size()) throw std::invalid_argument("price count does not match grid");
    return s;
}

}  // namespace coevo
