#include "coevo/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace coevo {

namespace {

using Vec = std::array<double, kNumParams>;

double dot(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

double inf_norm(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

Vec clamp_unit(Vec u, const std::array<bool, kNumParams>& free, const Vec& anchor) {
    for (std::size_t i = 0; i < kNumParams; ++i) u[i] = free[i] ? std::clamp(u[i], 0.0, 1.0) : anchor[i];
    return u;
}

// Objective and gradient in unit-box coordinates.
class UnitProblem {
public:
    UnitProblem(const Objective& f, const ParamBox& box, const LbfgsConfig& cfg) : f_(f), box_(box), cfg_(cfg) {}

    HestonParams to_params(const Vec& u) const { return clamp(box_.from_unit(u), box_); }

    double value(const Vec& u) {
        ++evaluations;
        const double v = f_(to_params(u));
        return std::isfinite(v) ? v : kSentinelLoss;
    }

    Vec gradient(const Vec& u) {
        Vec g{};
        const double h = cfg_.fd_step;
        for (std::size_t i = 0; i < kNumParams; ++i) {
            if (!cfg_.free[i] || box_.range(i) <= 0.0) continue;
            Vec lo = u;
            Vec hi = u;
            double span = 2.0 * h;
            if (u[i] - h < 0.0) {
                lo[i] = u[i];
                hi[i] = u[i] + h;
                span = h;
            } else if (u[i] + h > 1.0) {
                lo[i] = u[i] - h;
                hi[i] = u[i];
                span = h;
            } else {
                lo[i] = u[i] - h;
                hi[i] = u[i] + h;
            }
            g[i] = (value(hi) - value(lo)) / span;
            if (!std::isfinite(g[i])) g[i] = 0.0;
        }
        return g;
    }

    std::size_t evaluations = 0;

private:
    const Objective& f_;
    const ParamBox& box_;
    const LbfgsConfig& cfg_;
};

// Gradient with components pushing out of the box at an active bound removed.
Vec projected(const Vec& g, const Vec& u) {
    Vec p = g;
    for (std::size_t i = 0; i < kNumParams; ++i) {
        if ((u[i] <= 0.0 && g[i] > 0.0) || (u[i] >= 1.0 && g[i] < 0.0)) p[i] = 0.0;
    }
    return p;
}

}  // namespace

PlainGaRun run_plain_ga(const CoevoProblem& problem, const GaConfig& cfg, std::size_t generations, std::uint64_t seed,
                        bool record_history, std::size_t threads) {
    problem.validate();
    cfg.validate();
    Rng rng = Rng(seed).split(kGaStream);
    const LossEvaluator eval(problem.target, problem.ctx, problem.quad, threads);
    PlainGaRun run;
    run.state = init_population(cfg, problem.box, eval, rng);
    for (std::size_t g = 1; g <= generations; ++g) {
        if (record_history) {
            auto inc = build_elite_dataset(run.state.population, cfg.elite_fraction, problem.ctx, problem.grid,
                                           problem.quad, threads);
            run.history.insert(run.history.end(), inc.begin(), inc.end());
        }
        step_generation(run.state, cfg, problem.box, eval, rng);
        run.telemetry.push_back(summarize(run.state));
        run.telemetry.back().generation = g;
    }
    return run;
}

void LbfgsConfig::validate() const {
    if (memory < 1) throw std::invalid_argument("L-BFGS memory must be >= 1");
    if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw std::invalid_argument("need 0 < c1 < c2 < 1");
    if (!(fd_step > 0.0 && fd_step < 0.1)) throw std::invalid_argument("finite-difference step must be in (0, 0.1)");
}

std::array<double, kNumParams> fd_gradient(const Objective& f, const HestonParams& p, const ParamBox& box, double step,
                                           int order) {
    if (order != 2 && order != 4) throw std::invalid_argument("finite-difference order must be 2 or 4");
    const Vec u = box.to_unit(p);
    auto point = [&](std::size_t i, double du) {
        Vec v = u;
        v[i] += du;
        return clamp(box.from_unit(v), box);
    };
    auto at = [&](std::size_t i, double du) { return f(point(i, du)); };
    Vec g{};
    for (std::size_t i = 0; i < kNumParams; ++i) {
        const double range = box.range(i);
        if (range <= 0.0) continue;
        const double h = step;
        if (u[i] - 2.0 * h < 0.0 || u[i] + 2.0 * h > 1.0) {
            // One-sided; the variance floor can shorten the step, so divide by the realised one.
            const double dir = u[i] - 2.0 * h < 0.0 ? 1.0 : -1.0;
            const auto a = point(i, 0.0), b = point(i, dir * h);
            g[i] = (f(b) - f(a)) / (b[i] - a[i]);
            continue;
        }
        double d = 0.0;
        if (order == 2) {
            d = (at(i, h) - at(i, -h)) / (2.0 * h);
        } else {
            d = (-at(i, 2.0 * h) + 8.0 * at(i, h) - 8.0 * at(i, -h) + at(i, -2.0 * h)) / (12.0 * h);
        }
        g[i] = d / range;
    }
    return g;
}

LbfgsResult run_lbfgs(const Objective& f, const HestonParams& start, const ParamBox& box, const LbfgsConfig& cfg) {
    cfg.validate();
    box.validate();
    if (!box.contains(start)) throw std::invalid_argument("L-BFGS start lies outside the box");
    UnitProblem prob(f, box, cfg);
    const Vec anchor = box.to_unit(start);
    Vec x = clamp_unit(anchor, cfg.free, anchor);
    double fx = prob.value(x);
    LbfgsResult res;
    res.start_mse = fx;
    if (!std::isfinite(fx)) {
        res.params = prob.to_params(x);
        res.evaluations = prob.evaluations;
        return res;
    }
    Vec g = prob.gradient(x);
    std::deque<std::pair<Vec, Vec>> memory;

    for (; res.iterations < cfg.max_iters; ++res.iterations) {
        const Vec pg = projected(g, x);
        if (inf_norm(pg) < cfg.grad_tol) break;

        // Two-loop recursion on the projected gradient.
        Vec q = pg;
        std::vector<double> alpha(memory.size());
        for (std::size_t k = memory.size(); k-- > 0;) {
            const auto& [s, y] = memory[k];
            alpha[k] = dot(s, q) / dot(y, s);
            for (std::size_t i = 0; i < kNumParams; ++i) q[i] -= alpha[k] * y[i];
        }
        double gamma = 1.0;
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            gamma = dot(s, y) / dot(y, y);
        }
        for (double& v : q) v *= gamma;
        for (std::size_t k = 0; k < memory.size(); ++k) {
            const auto& [s, y] = memory[k];
            const double beta = dot(y, q) / dot(y, s);
            for (std::size_t i = 0; i < kNumParams; ++i) q[i] += s[i] * (alpha[k] - beta);
        }
        Vec d{};
        for (std::size_t i = 0; i < kNumParams; ++i) d[i] = cfg.free[i] ? -q[i] : 0.0;
        if (!(dot(d, pg) < 0.0)) {
            memory.clear();
            for (std::size_t i = 0; i < kNumParams; ++i) d[i] = -pg[i];
        }

        double t = memory.empty() ? std::min(1.0, 0.1 / std::max(inf_norm(d), 1e-300)) : 1.0;
        Vec x_new{};
        double f_new = kSentinelLoss;
        bool accepted = false;
        for (std::size_t bt = 0; bt < cfg.max_backtracks; ++bt, t *= 0.5) {
            for (std::size_t i = 0; i < kNumParams; ++i) x_new[i] = x[i] + t * d[i];
            x_new = clamp_unit(x_new, cfg.free, anchor);
            Vec step{};
            for (std::size_t i = 0; i < kNumParams; ++i) step[i] = x_new[i] - x[i];
            if (inf_norm(step) == 0.0) break;
            f_new = prob.value(x_new);
            if (std::isfinite(f_new) && f_new <= fx + cfg.c1 * dot(g, step)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        Vec s{};
        for (std::size_t i = 0; i < kNumParams; ++i) s[i] = x_new[i] - x[i];
        const Vec g_new = prob.gradient(x_new);
        Vec y{};
        for (std::size_t i = 0; i < kNumParams; ++i) y[i] = g_new[i] - g[i];
        const double sy = dot(s, y);
        // Keep the pair only if it carries positive curvature and passes the weak Wolfe curvature test.
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)) && dot(g_new, s) >= cfg.c2 * dot(g, s)) {
            memory.emplace_back(s, y);
            if (memory.size() > cfg.memory) memory.pop_front();
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if (inf_norm(s) < cfg.step_tol) {
            ++res.iterations;
            break;
        }
    }
    res.params = prob.to_params(x);
    res.final_mse = fx;
    res.evaluations = prob.evaluations;
    return res;
}

LbfgsResult run_lbfgs(const LossEvaluator& eval, const HestonParams& start, const ParamBox& box,
                      const LbfgsConfig& cfg) {
    return run_lbfgs(Objective([&eval](const HestonParams& p) { return eval(p); }), start, box, cfg);
}

HestonParams box_midpoint(const ParamBox& box) { return box.from_unit({0.5, 0.5, 0.5, 0.5, 0.5}); }

std::optional<std::size_t> first_generation_at(std::span<const GenerationRecord> rows, double reference) {
    for (const auto& r : rows) {
        if (r.best_mse <= reference) return r.generation;
    }
    return std::nullopt;
}

std::optional<std::size_t> time_to_threshold(const CoevoProblem& problem, const CoevoConfig& cfg, std::uint64_t seed,
                                             double reference, std::size_t max_generations) {
    CoevoState state = init_coevolution(problem, cfg, seed);
    for (std::size_t g = 0; g < max_generations; ++g) {
        coevolution_generation(state, problem, cfg);
        if (state.telemetry.convergence.back().best_mse <= reference) return state.generation;
    }
    return std::nullopt;
}

std::string ttt_csv(std::span<const TttRecord> rows) {
    std::string out = "trial_id,lbfgs_mse,lbfgs_iters,ttt_generation,lbfgs_start_mse,censored\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.17g},{},{},{:.17g},{}\n", r.trial_id, r.lbfgs_mse, r.lbfgs_iters,
                           r.ttt_generation ? std::to_string(*r.ttt_generation) : std::string("NA"),
                           r.lbfgs_start_mse, r.ttt_generation ? 0 : 1);
    }
    return out;
}

}  // namespace coevo
