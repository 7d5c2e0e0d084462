#include "coevo/datasets.hpp"

#include "coevo/log.hpp"
#include "coevo/parallel.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace coevo {

namespace {

constexpr std::size_t kMaxRedraws = 1000;

std::optional<std::vector<double>> try_price(const HestonParams& p, const MarketContext& ctx, const SurfaceGrid& grid,
                                             const QuadratureSpec& quad) {
    try {
        return price_surface(p, ctx, grid, quad).prices;
    } catch (const PricingError&) {
        return std::nullopt;
    }
}

}  // namespace

Dataset build_lhs_dataset(const ParamBox& box, std::size_t n, const MarketContext& ctx, const SurfaceGrid& grid,
                          const QuadratureSpec& quad, Rng& rng, std::size_t threads, std::size_t* resampled) {
    const auto params = sample_lhs(box, n, rng);
    std::vector<std::optional<std::vector<double>>> prices(n);
    parallel_for(n, threads, [&](std::size_t i) { prices[i] = try_price(params[i], ctx, grid, quad); });

    Dataset out;
    out.reserve(n);
    std::size_t redraws = 0;
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        HestonParams p = params[i];
        auto surface = std::move(prices[i]);
        if (!surface) {
            const auto u = box.to_unit(p);
            std::array<double, kNumParams> cell{};
            for (std::size_t d = 0; d < kNumParams; ++d) cell[d] = std::min(dn - 1.0, std::floor(u[d] * dn));
            for (std::size_t attempt = 0; !surface; ++attempt) {
                if (attempt == kMaxRedraws) {
                    throw std::runtime_error("no priceable parameter found in LHS cell of " + to_string(params[i]));
                }
                std::array<double, kNumParams> v{};
                for (std::size_t d = 0; d < kNumParams; ++d) v[d] = (cell[d] + rng.uniform()) / dn;
                p = clamp(box.from_unit(v), box);
                surface = try_price(p, ctx, grid, quad);
                ++redraws;
            }
        }
        out.push_back({std::move(*surface), p});
    }
    if (redraws > 0) log::info(fmt::format("LHS dataset: {} unstable samples redrawn", redraws));
    if (resampled) *resampled = redraws;
    return out;
}

HestonParams draw_synthetic_target(const ParamBox& box, const MarketContext& ctx, const SurfaceGrid& grid,
                                   const QuadratureSpec& quad, Rng& rng) {
    for (std::size_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
        const auto p = clamp(sample_uniform(box, 1, rng).front(), box);
        if (try_price(p, ctx, grid, quad)) return p;
    }
    throw std::runtime_error("no priceable target found in the parameter box");
}

Dataset build_ga_history_dataset(const CoevoState& state) { return state.cumulative; }

std::string seed_mode_name(SeedMode m) { return m == SeedMode::Seeded ? "seeded" : "unseeded"; }

std::string data_source_name(DataSource s) { return s == DataSource::Lhs ? "lhs" : "ga_history"; }

OverfitResult train_and_evaluate(const Dataset& data, const Dataset& test, const ParamBox& box, double spot,
                                 const OverfitConfig& cfg, Rng& rng) {
    if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
    const auto [train, validation] = split_grouped(data, cfg.train.train_ratio, rng);
    const auto norm = NormalizationSpec::fit(train, spot);
    auto net = MlpGenome::create(data.front().surface.size(), cfg.widths, cfg.activation, rng);
    AdamState adam;
    TrainOptions opts = cfg.train;
    opts.epochs = cfg.epochs;
    OverfitResult r;
    r.dataset_size = data.size();
    r.curve = train_epochs(net, adam, train, validation, norm, box, opts, rng);
    if (!r.curve.train_mse.empty()) {
        r.final_train = r.curve.train_mse.back();
        r.final_val = r.curve.val_mse.back();
    }
    r.gap = r.final_val - r.final_train;
    r.heldout_mse = test.empty() ? std::numeric_limits<double>::quiet_NaN() : unit_mse(net, test, norm, box);
    return r;
}

std::vector<OverfitResult> overfitting_experiment(const CoevoProblem& problem, const OverfitConfig& cfg,
                                                  const std::vector<SeedMode>& modes, std::uint64_t seed) {
    const Rng root(seed);
    Rng test_rng = root.split(10);
    Rng lhs_rng = root.split(11);
    const Dataset test = build_lhs_dataset(problem.box, cfg.n_test, problem.ctx, problem.grid, problem.quad, test_rng,
                                           cfg.threads);
    const Dataset lhs = build_lhs_dataset(problem.box, cfg.n_lhs, problem.ctx, problem.grid, problem.quad, lhs_rng,
                                          cfg.threads);
    std::vector<OverfitResult> results;
    for (auto mode : modes) {
        Dataset history;
        if (mode == SeedMode::Seeded) {
            CoevoConfig cc = cfg.coevo;
            cc.generations = cfg.generations;
            cc.networks = true;
            cc.inject = true;
            cc.threads = cfg.threads;
            history = build_ga_history_dataset(run_coevolution(problem, cc, seed));
        } else {
            history = run_plain_ga(problem, cfg.coevo.ga, cfg.generations, seed, true, cfg.threads).history;
        }
        for (auto source : {DataSource::GaHistory, DataSource::Lhs}) {
            // Same stream for every cell of the experiment: identical splits-by-position and initial weights.
            Rng train_rng = root.split(20);
            auto r = train_and_evaluate(source == DataSource::Lhs ? lhs : history, test, problem.box,
                                        problem.ctx.spot, cfg, train_rng);
            r.mode = mode;
            r.source = source;
            results.push_back(std::move(r));
        }
    }
    return results;
}

std::string overfit_curves_csv(std::span<const OverfitResult> results) {
    std::string out = "mode,dataset,epoch,train_mse,val_mse\n";
    for (const auto& r : results) {
        for (std::size_t e = 0; e < r.curve.train_mse.size(); ++e) {
            out += fmt::format("{},{},{},{:.17g},{:.17g}\n", seed_mode_name(r.mode), data_source_name(r.source), e + 1,
                               r.curve.train_mse[e], r.curve.val_mse[e]);
        }
    }
    return out;
}

std::string overfit_summary_csv(std::span<const OverfitResult> results) {
    std::string out = "mode,dataset,size,final_train_mse,final_val_mse,gap,heldout_mse\n";
    for (const auto& r : results) {
        out += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", seed_mode_name(r.mode),
                           data_source_name(r.source), r.dataset_size, r.final_train, r.final_val, r.gap,
                           r.heldout_mse);
    }
    return out;
}

std::string dataset_manifest_json(const SurfaceGrid& grid, const ParamBox& box, std::uint64_t seed,
                                  const std::string& mode, std::size_t size) {
    nlohmann::json j;
    j["grid"] = {{"strikes", grid.strikes}, {"maturities", grid.maturities}};
    nlohmann::json b;
    for (std::size_t i = 0; i < kNumParams; ++i) b[kParamNames[i]] = {box.lower[i], box.upper[i]};
    j["box"] = b;
    j["seed"] = seed;
    j["mode"] = mode;
    j["size"] = size;
    return j.dump(2);
}

}  // namespace coevo
