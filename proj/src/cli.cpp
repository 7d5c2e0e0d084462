#include "coevo/cli.hpp"

#include "coevo/log.hpp"
#include "coevo/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace coevo::cli {

namespace {

// Stream tags for trial_seed, one per command.
constexpr std::uint64_t kConvergenceTag = 1;
constexpr std::uint64_t kTttTag = 2;
constexpr std::uint64_t kOverfitTag = 3;
constexpr std::uint64_t kArchstatsTag = 4;
constexpr std::uint64_t kRealTag = 5;
// Offsets inside a trial: the target draw and the evolutionary run get separate streams.
constexpr std::uint64_t kTargetStream = 0;
constexpr std::uint64_t kRunStream = 1;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes files under one directory, each with a `<name>.config.json` sidecar.
class OutputDir {
public:
    OutputDir(std::filesystem::path dir, const ExperimentConfig& cfg) : dir_(std::move(dir)), cfg_(config_to_json(cfg)) {}

    void write(const std::string& name, const std::string& content) const {
        write_raw(dir_ / name, content);
        write_raw(dir_ / (name + ".config.json"), cfg_);
    }

    OutputDir sub(const std::string& name) const {
        OutputDir d = *this;
        d.dir_ /= name;
        return d;
    }

private:
    static void write_raw(const std::filesystem::path& path, const std::string& content) {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) throw std::runtime_error("cannot write " + path.string());
    }

    std::filesystem::path dir_;
    std::string cfg_;
};

Rng trial_rng(const ExperimentConfig& cfg, std::uint64_t tag, std::size_t trial) {
    return Rng(trial_seed(cfg.seed, tag, trial)).split(kTargetStream);
}

std::uint64_t run_seed(const ExperimentConfig& cfg, std::uint64_t tag, std::size_t trial) {
    return Rng(trial_seed(cfg.seed, tag, trial)).split(kRunStream).seed();
}

struct SyntheticCase {
    HestonParams truth;
    CoevoProblem problem;
};

SyntheticCase synthetic_case(const ExperimentConfig& cfg, std::uint64_t tag, std::size_t trial) {
    const auto grid = cfg.grid.grid();
    const auto ctx = cfg.grid.context();
    Rng rng = trial_rng(cfg, tag, trial);
    const auto truth = draw_synthetic_target(cfg.box, ctx, grid, cfg.quad, rng);
    return {truth, CoevoProblem::from_surface(price_surface(truth, ctx, grid, cfg.quad), ctx, cfg.box, cfg.quad)};
}

CoevoConfig coevo_config(const ExperimentConfig& cfg, std::size_t generations, std::size_t threads) {
    CoevoConfig c = cfg.coevo;
    c.generations = generations;
    c.threads = threads;
    return c;
}

std::string convergence_rows(std::size_t target, const char* method, std::span<const GenerationRecord> rows) {
    std::string out;
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{:.17g},{:.17g}\n", target, method, r.generation, r.best_mse, r.best_rmse);
    }
    return out;
}

std::vector<std::size_t> checkpoints_up_to(std::vector<std::size_t> points, std::size_t g) {
    std::erase_if(points, [g](std::size_t c) { return c == 0 || c > g; });
    std::ranges::sort(points);
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.empty() || points.back() != g) points.push_back(g);
    return points;
}

std::size_t last_or(const std::vector<std::size_t>& v, std::size_t fallback) {
    return v.empty() ? fallback : *std::ranges::max_element(v);
}

std::string heston_header() { return "kappa,lambda,sigma,rho,v0"; }

std::string heston_fields(const HestonParams& p) {
    return fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", p.kappa, p.lambda, p.sigma, p.rho, p.v0);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t command, std::size_t trial) {
    return Rng(seed).split(command).split(trial).seed();
}

std::array<double, kNumParams> relative_errors(const HestonParams& estimate, const HestonParams& truth) {
    std::array<double, kNumParams> e{};
    for (std::size_t i = 0; i < kNumParams; ++i) e[i] = std::abs(estimate[i] - truth[i]) / std::abs(truth[i]);
    return e;
}

PriceSurface cmd_price(const ExperimentConfig& cfg) {
    auto surface = price_surface(cfg.params, cfg.grid.context(), cfg.grid.grid(), cfg.quad);
    const OutputDir out(cfg.out, cfg);
    out.write("surface.csv", surface_to_csv(surface));
    out.write("surface.json", surface_to_json(surface) + "\n");
    return surface;
}

std::vector<ConvergenceTrial> cmd_convergence(const ExperimentConfig& cfg) {
    const std::size_t generations = cfg.generations.value_or(cfg.coevo.generations);
    const OutputDir out(cfg.out, cfg);
    std::vector<ConvergenceTrial> trials(cfg.targets);
    std::vector<CoevoTelemetry> telemetry(cfg.targets);
    // Trials run side by side; each is single-threaded so results do not depend on the thread count.
    parallel_for(cfg.targets, cfg.threads, [&](std::size_t t) {
        const auto sc = synthetic_case(cfg, kConvergenceTag, t);
        const auto seed = run_seed(cfg, kConvergenceTag, t);
        auto ga = run_plain_ga(sc.problem, cfg.coevo.ga, generations, seed, false, 1);
        auto co = run_coevolution(sc.problem, coevo_config(cfg, generations, 1), seed);
        trials[t] = {t, sc.truth, std::move(ga.telemetry), co.telemetry.convergence};
        telemetry[t] = std::move(co.telemetry);
    });

    std::string rows = "target,method,generation,best_mse,best_rmse\n";
    std::string summary = "target,ga_final_rmse,coevo_final_rmse,coevo_generation_to_ga_final\n";
    for (const auto& tr : trials) {
        rows += convergence_rows(tr.target_id, "ga", tr.ga);
        rows += convergence_rows(tr.target_id, "coevo", tr.coevo);
        const auto reach = first_generation_at(tr.coevo, tr.ga.back().best_mse);
        summary += fmt::format("{},{:.17g},{:.17g},{}\n", tr.target_id, tr.ga.back().best_rmse,
                               tr.coevo.back().best_rmse, reach ? std::to_string(*reach) : std::string("NA"));

        const auto& tel = telemetry[tr.target_id];
        const auto dir = out.sub(fmt::format("target_{}", tr.target_id));
        dir.write("truth.json", params_to_json(tr.truth));
        dir.write("telemetry.csv", telemetry_csv(tel.convergence));
        dir.write("nn_fitness.csv", nn_fitness_csv(tel.nn_fitness));
        dir.write("arch_stats.csv", arch_stats_csv(tel.arch_stats));
        dir.write("learning_curves.csv", learning_curves_csv(tel.learning_curves));
        dir.write("dataset_log.csv", dataset_log_csv(tel.dataset_log));
    }
    out.write("convergence.csv", rows);
    out.write("convergence_summary.csv", summary);
    return trials;
}

std::vector<TttRecord> cmd_ttt(const ExperimentConfig& cfg) {
    const std::size_t max_generations = cfg.generations.value_or(cfg.ttt.max_generations);
    std::vector<TttRecord> records(cfg.ttt.trials);
    parallel_for(cfg.ttt.trials, cfg.threads, [&](std::size_t t) {
        const auto sc = synthetic_case(cfg, kTttTag, t);
        const LossEvaluator eval(sc.problem.target, sc.problem.ctx, sc.problem.quad);
        const auto ref = run_lbfgs(eval, box_midpoint(cfg.box), cfg.box, cfg.lbfgs);
        TttRecord r;
        r.trial_id = t;
        r.lbfgs_start_mse = ref.start_mse;
        r.lbfgs_mse = ref.final_mse;
        r.lbfgs_iters = ref.iterations;
        r.ttt_generation = time_to_threshold(sc.problem, coevo_config(cfg, max_generations, 1),
                                             run_seed(cfg, kTttTag, t), ref.final_mse, max_generations);
        records[t] = r;
    });
    OutputDir(cfg.out, cfg).write("ttt.csv", ttt_csv(records));
    return records;
}

std::vector<OverfitResult> cmd_overfit(const ExperimentConfig& cfg) {
    const auto sc = synthetic_case(cfg, kOverfitTag, 0);
    OverfitConfig oc;
    oc.n_lhs = cfg.overfit.n_lhs;
    oc.n_test = cfg.overfit.n_test;
    oc.generations = cfg.generations.value_or(cfg.overfit.generations);
    oc.epochs = cfg.overfit.epochs;
    oc.train = cfg.coevo.nn.train;
    oc.widths = cfg.coevo.nn.initial_widths;
    oc.activation = cfg.coevo.nn.initial_activation;
    oc.coevo = cfg.coevo;
    oc.threads = cfg.threads;
    auto results =
        overfitting_experiment(sc.problem, oc, {SeedMode::Seeded, SeedMode::Unseeded}, run_seed(cfg, kOverfitTag, 0));
    const OutputDir out(cfg.out, cfg);
    out.write("truth.json", params_to_json(sc.truth));
    out.write("overfit_curves.csv", overfit_curves_csv(results));
    out.write("overfit_summary.csv", overfit_summary_csv(results));
    return results;
}

std::vector<ArchStats> cmd_archstats(const ExperimentConfig& cfg) {
    const std::size_t generations = cfg.generations.value_or(last_or(cfg.archstats.checkpoints, 1));
    const auto points = checkpoints_up_to(cfg.archstats.checkpoints, generations);
    const auto sc = synthetic_case(cfg, kArchstatsTag, 0);
    auto cc = coevo_config(cfg, generations, cfg.threads);
    cc.snapshot_generations = points;
    const auto seed = run_seed(cfg, kArchstatsTag, 0);
    const auto state = run_coevolution(sc.problem, cc, seed);

    std::vector<ArchStats> rows;
    std::string samples = std::string("Generation,") + kArchSamplesHeader + "\n";
    Rng pick = Rng(seed).split(kArchstatsTag);
    for (auto g : points) {
        const auto it = std::ranges::find_if(state.telemetry.arch_stats, [g](const auto& s) { return s.generation == g; });
        if (it != state.telemetry.arch_stats.end()) rows.push_back(*it);
        const auto snap = state.telemetry.snapshots.find(g);
        if (snap == state.telemetry.snapshots.end()) continue;
        std::vector<std::size_t> idx(snap->second.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        pick.shuffle(idx);
        idx.resize(std::min(idx.size(), cfg.archstats.samples));
        std::ranges::sort(idx);
        std::vector<MlpGenome> chosen;
        for (auto i : idx) chosen.push_back(snap->second[i]);
        const auto block = arch_samples_csv(chosen, g);
        samples += block.substr(block.find('\n') + 1);
    }
    const OutputDir out(cfg.out, cfg);
    out.write("arch_stats.csv", arch_stats_csv(rows));
    out.write("samples.csv", samples);
    out.write("arch_stats_all.csv", arch_stats_csv(state.telemetry.arch_stats));
    return rows;
}

namespace {

RateCurve market_curve(const ExperimentConfig& cfg) {
    return cfg.market.rates.empty() ? default_treasury_curve() : load_rates(cfg.market.rates);
}

/// Network input grid spanning the quotes' maturities and (within the configured range) moneyness.
SurfaceGrid market_grid(const ExperimentConfig& cfg, const CalibrationTarget& target, double spot) {
    double lm_lo = INFINITY, lm_hi = -INFINITY, tau_lo = INFINITY, tau_hi = -INFINITY;
    for (const auto& c : target.cells) {
        const double lm = std::log(c.strike / spot);
        lm_lo = std::min(lm_lo, lm);
        lm_hi = std::max(lm_hi, lm);
        tau_lo = std::min(tau_lo, c.tau);
        tau_hi = std::max(tau_hi, c.tau);
    }
    lm_lo = std::max(lm_lo, cfg.grid.lm_lo);
    lm_hi = std::min(lm_hi, cfg.grid.lm_hi);
    if (!(lm_lo < lm_hi)) std::tie(lm_lo, lm_hi) = std::pair{cfg.grid.lm_lo, cfg.grid.lm_hi};
    if (!(tau_lo < tau_hi)) tau_hi = tau_lo + 1.0 / kDaysPerYear;
    return SurfaceGrid::synthetic(spot, cfg.grid.strikes, cfg.grid.maturities, lm_lo, lm_hi, tau_lo, tau_hi);
}

HestonParams train_lhs_network(const ExperimentConfig& cfg, const CoevoProblem& problem, Rng rng) {
    Rng data_rng = rng.split(0);
    Rng train_rng = rng.split(1);
    const auto data = build_lhs_dataset(problem.box, cfg.market.lhs_size, problem.ctx, problem.grid, problem.quad,
                                        data_rng, cfg.threads);
    const auto norm = NormalizationSpec::fit(data, problem.ctx.spot);
    auto net = MlpGenome::create(problem.grid.size(), cfg.coevo.nn.initial_widths, cfg.coevo.nn.initial_activation,
                                 train_rng);
    AdamState adam;
    TrainOptions opts = cfg.coevo.nn.train;
    opts.epochs = cfg.market.lhs_epochs;
    train_epochs(net, adam, data, norm, problem.box, opts, train_rng);
    return forward(net, problem.net_input, norm, problem.box);
}

}  // namespace

CalibrateRealResult cmd_calibrate_real(const ExperimentConfig& cfg) {
    if (cfg.market.chain.empty()) throw ConfigError("calibrate-real needs a chain file ([market] chain or --chain)");
    ChainLoadReport report;
    const auto raw = load_chain(cfg.market.chain, &report);
    const double spot = cfg.market.spot;
    const auto quotes = filter_quotes(raw, spot, cfg.market.filter);
    const auto curve = market_curve(cfg);
    const auto mt = assemble_target(quotes, spot, curve);
    const auto grid = market_grid(cfg, mt.target, spot);
    const CoevoProblem problem{mt.target, interpolate_to_grid(mt.target, grid), grid, mt.ctx, cfg.box, cfg.quad};

    CalibrateRealResult res;
    res.quotes = quotes.size();
    if (!cfg.market.truth.empty()) res.truth = params_from_json(read_text(cfg.market.truth));

    const std::size_t generations = cfg.generations.value_or(last_or(cfg.market.checkpoints, 1));
    const auto points = checkpoints_up_to(cfg.market.checkpoints, generations);
    const auto cc = coevo_config(cfg, generations, cfg.threads);
    const auto seed = run_seed(cfg, kRealTag, 0);
    auto state = init_coevolution(problem, cc, seed);
    for (auto g : points) {
        while (state.generation < g) coevolution_generation(state, problem, cc);
        const auto& rec = state.telemetry.convergence.back();
        ProgressRow row{g, rec.best_mse, rec.best_params, std::nullopt};
        if (res.truth) row.rel_error = relative_errors(rec.best_params, *res.truth);
        res.progress.push_back(row);
        log::info(fmt::format("generation {}: mse {:.6g}", g, rec.best_mse));
    }

    const auto best_net = std::ranges::min_element(state.nets, better_network);
    res.ga_history_prediction = best_net != state.nets.end() && std::isfinite(best_net->direct_score)
                                    ? best_net->prediction
                                    : best_individual(state.ga).params;
    res.lhs_prediction = train_lhs_network(cfg, problem, Rng(seed).split(kRealTag));

    std::map<int, std::size_t> per_expiry;
    for (const auto& q : quotes) ++per_expiry[q.expiry_days];
    int days = cfg.market.slice_days;
    if (days == 0) {
        days = std::ranges::max_element(per_expiry, {}, [](const auto& kv) { return kv.second; })->first;
    } else if (!per_expiry.contains(days)) {
        throw ConfigError(fmt::format("no quotes with expiry {} days", days));
    }
    const double tau = days / kDaysPerYear;
    const auto& ga_best = best_individual(state.ga).params;
    for (std::size_t i = 0; i < mt.target.size(); ++i) {
        const auto& c = mt.target.cells[i];
        if (std::abs(c.tau - tau) > 1e-12) continue;
        auto model = [&](const HestonParams& p) {
            try {
                return call_price(p, mt.ctx, c.tau, c.strike, cfg.quad);
            } catch (const PricingError&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        };
        res.slice.push_back({days, c.strike, mt.target.prices[i], model(res.ga_history_prediction),
                             model(res.lhs_prediction), model(ga_best)});
    }
    std::ranges::sort(res.slice, {}, &SliceRow::strike);

    std::string progress = "generation,mse,rmse," + heston_header();
    if (res.truth) progress += ",kappa_err_pct,lambda_err_pct,sigma_err_pct,rho_err_pct,v0_err_pct";
    progress += "\n";
    for (const auto& r : res.progress) {
        progress += fmt::format("{},{:.17g},{:.17g},{}", r.generation, r.mse, rmse(r.mse), heston_fields(r.best));
        if (r.rel_error) {
            for (double e : *r.rel_error) progress += fmt::format(",{:.17g}", 100.0 * e);
        }
        progress += "\n";
    }
    std::string slice = "expiry_days,strike,log_moneyness,market,ga_history_model,lhs_model,ga_best\n";
    for (const auto& s : res.slice) {
        slice += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.expiry_days, s.strike,
                             std::log(s.strike / spot), s.market, s.ga_history_model, s.lhs_model, s.ga_best);
    }
    nlohmann::ordered_json summary;
    summary["quotes_read"] = report.rows;
    summary["quotes_used"] = res.quotes;
    summary["skipped_malformed"] = report.malformed;
    summary["skipped_crossed"] = report.crossed;
    summary["skipped_non_positive"] = report.non_positive;
    summary["slice_expiry_days"] = days;
    summary["best"] = nlohmann::ordered_json::parse(params_to_json(ga_best));
    summary["best_mse"] = state.telemetry.convergence.back().best_mse;
    summary["ga_history_prediction"] = nlohmann::ordered_json::parse(params_to_json(res.ga_history_prediction));
    summary["lhs_prediction"] = nlohmann::ordered_json::parse(params_to_json(res.lhs_prediction));

    const OutputDir out(cfg.out, cfg);
    out.write("progress.csv", progress);
    out.write("slice.csv", slice);
    out.write("calibration.json", summary.dump(2) + "\n");
    out.write("telemetry.csv", telemetry_csv(state.telemetry.convergence));
    out.write("target.json", target_manifest_json(mt) + "\n");
    return res;
}

std::vector<OptionQuote> cmd_make_chain(const ExperimentConfig& cfg) {
    const auto curve = market_curve(cfg);
    const MarketContext ctx{cfg.market.spot, curve};
    const ChainSpec spec;
    auto quotes = synthesize_chain(cfg.params, ctx, spec);
    const OutputDir out(cfg.out, cfg);
    out.write("chain.csv", chain_to_csv(quotes, spec.half_spread));
    out.write("truth.json", params_to_json(cfg.params));
    out.write("rates.csv", rates_to_csv(curve));
    return quotes;
}

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> generations;
    std::optional<std::size_t> population;
    std::optional<std::string> grid;
    std::optional<std::string> box;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
    bool strict = false;
    bool verbose = false;
    std::optional<std::string> params;
    std::optional<std::string> chain;
    std::optional<std::string> truth;
    std::optional<std::string> rates;
    std::optional<double> spot;
    std::optional<std::size_t> trials;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", f.seed, "Root random seed");
    app->add_option("--generations", f.generations, "Generations of each evolutionary run");
    app->add_option("--population", f.population, "GA population size");
    app->add_option("--grid", f.grid, "Surface grid as KxT (strikes x maturities)");
    app->add_option("--box", f.box, "Parameter box file")->check(CLI::ExistingFile);
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--threads", f.threads, "Worker threads");
    app->add_flag("--strict-quadrature", f.strict, "Reject prices whose quadrature does not converge");
    app->add_flag("-v,--verbose", f.verbose, "Progress messages on stderr");
}

ExperimentConfig resolve(const Flags& f) {
    ExperimentConfig cfg;
    if (f.config) apply_config_file(cfg, *f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.generations) cfg.generations = *f.generations;
    if (f.population) cfg.coevo.ga.population_size = *f.population;
    if (f.grid) std::tie(cfg.grid.strikes, cfg.grid.maturities) = parse_grid_spec(*f.grid);
    if (f.box) {
        try {
            cfg.box = load_param_box(*f.box);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (f.out) cfg.out = *f.out;
    if (f.threads) cfg.threads = *f.threads;
    if (f.strict) cfg.quad.strict = true;
    if (f.params) cfg.params = params_from_json(read_text(*f.params));
    if (f.chain) cfg.market.chain = *f.chain;
    if (f.truth) cfg.market.truth = *f.truth;
    if (f.rates) cfg.market.rates = *f.rates;
    if (f.spot) cfg.market.spot = *f.spot;
    if (f.trials) {
        cfg.targets = *f.trials;
        cfg.ttt.trials = *f.trials;
    }
    cfg.validate();
    return cfg;
}

std::string fmt_opt(const std::optional<std::size_t>& g) { return g ? std::to_string(*g) : std::string("censored"); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Co-evolutionary Heston calibration: experiments and utilities", "coevo"};
    app.require_subcommand(1);
    Flags f;

    using Action = std::function<void(const ExperimentConfig&)>;
    std::vector<std::pair<CLI::App*, Action>> commands;
    auto command = [&](const char* name, const char* help, Action action) {
        auto* sc = app.add_subcommand(name, help);
        add_common(sc, f);
        commands.emplace_back(sc, std::move(action));
        return sc;
    };

    auto* price = command("price", "Price a call surface on the grid", [&](const ExperimentConfig& cfg) {
        const auto s = cmd_price(cfg);
        out << fmt::format("priced {} cells -> {}\n", s.prices.size(), (cfg.out / "surface.csv").string());
    });
    price->add_option("--params", f.params, "Parameter JSON file")->check(CLI::ExistingFile);

    auto* conv = command("convergence", "Plain GA versus coevolution on synthetic targets",
                         [&](const ExperimentConfig& cfg) {
                             for (const auto& t : cmd_convergence(cfg)) {
                                 out << fmt::format("target {}: ga {:.6g}  coevo {:.6g}\n", t.target_id,
                                                    t.ga.back().best_rmse, t.coevo.back().best_rmse);
                             }
                         });
    conv->add_option("--trials", f.trials, "Number of synthetic targets");

    auto* ttt = command("ttt", "Generations needed to match an L-BFGS reference", [&](const ExperimentConfig& cfg) {
        for (const auto& r : cmd_ttt(cfg)) {
            out << fmt::format("trial {}: lbfgs mse {:.6g}, ttt {}\n", r.trial_id, r.lbfgs_mse,
                               fmt_opt(r.ttt_generation));
        }
    });
    ttt->add_option("--trials", f.trials, "Number of trials");

    command("overfit", "Train/validation gap of GA-history versus LHS training data", [&](const ExperimentConfig& cfg) {
        for (const auto& r : cmd_overfit(cfg)) {
            out << fmt::format("{} {}: gap {:.6g}, held-out {:.6g}\n", seed_mode_name(r.mode),
                               data_source_name(r.source), r.gap, r.heldout_mse);
        }
    });

    command("archstats", "Network architecture statistics at checkpoints", [&](const ExperimentConfig& cfg) {
        for (const auto& s : cmd_archstats(cfg)) out << arch_stats_row(s) << "\n";
    });

    auto* real = command("calibrate-real", "Calibrate to an option chain file", [&](const ExperimentConfig& cfg) {
        const auto r = cmd_calibrate_real(cfg);
        for (const auto& p : r.progress) {
            out << fmt::format("generation {}: mse {:.6g}", p.generation, p.mse);
            if (p.rel_error) {
                for (std::size_t i = 0; i < kNumParams; ++i) {
                    out << fmt::format("  {} {:.2f}%", kParamNames[i], 100.0 * (*p.rel_error)[i]);
                }
            }
            out << "\n";
        }
    });
    real->add_option("--chain", f.chain, "Option chain CSV")->check(CLI::ExistingFile);
    real->add_option("--truth", f.truth, "Ground-truth parameter JSON")->check(CLI::ExistingFile);
    real->add_option("--rates", f.rates, "Rate curve CSV (weeks,rate_percent)")->check(CLI::ExistingFile);
    real->add_option("--spot", f.spot, "Underlying spot");

    auto* chain = command("make-chain", "Write a synthetic option chain priced from known parameters",
                          [&](const ExperimentConfig& cfg) {
                              const auto q = cmd_make_chain(cfg);
                              out << fmt::format("{} quotes -> {}\n", q.size(), (cfg.out / "chain.csv").string());
                          });
    chain->add_option("--params", f.params, "Parameter JSON file")->check(CLI::ExistingFile);
    chain->add_option("--rates", f.rates, "Rate curve CSV (weeks,rate_percent)")->check(CLI::ExistingFile);
    chain->add_option("--spot", f.spot, "Underlying spot");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const auto previous = log::threshold();
    if (f.verbose) log::threshold() = log::Level::Info;
    int code = kExitOk;
    try {
        const auto cfg = resolve(f);
        for (auto& [sc, action] : commands) {
            if (sc->parsed()) action(cfg);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        code = kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = kExitFailure;
    }
    log::threshold() = previous;
    return code;
}

}  // namespace coevo::cli
