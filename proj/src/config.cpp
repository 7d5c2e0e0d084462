#include "coevo/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace coevo {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using SectionTable = std::map<std::string, Setter>;

template <typename T>
T parse_number(const std::string& raw) {
    const std::string s = boost::algorithm::trim_copy(raw);
    T value{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (s.empty() || ec != std::errc() || ptr != end) throw ConfigError("not a number: '" + raw + "'");
    return value;
}

double to_double(const std::string& s) { return parse_number<double>(s); }
std::size_t to_size(const std::string& s) { return parse_number<std::size_t>(s); }

bool to_bool(const std::string& raw) {
    const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(raw));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("not a boolean: '" + raw + "'");
}

std::vector<std::string> to_items(const std::string& raw) {
    std::string s = boost::algorithm::trim_copy(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::vector<std::string> parts;
    boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
    if (parts.size() == 1 && boost::algorithm::trim_copy(parts[0]).empty()) return {};
    return parts;
}

std::vector<std::size_t> to_sizes(const std::string& raw) {
    std::vector<std::size_t> out;
    for (const auto& p : to_items(raw)) out.push_back(to_size(p));
    return out;
}

std::pair<double, double> to_interval(const std::string& raw) {
    const auto parts = to_items(raw);
    if (parts.size() != 2) throw ConfigError("expected 'low, high': '" + raw + "'");
    return {to_double(parts[0]), to_double(parts[1])};
}

template <typename M>
Setter set(M member, auto convert) {
    return [member, convert](ExperimentConfig& c, const std::string& v) { std::invoke(member, c) = convert(v); };
}

const std::map<std::string, SectionTable>& tables() {
    static const std::map<std::string, SectionTable> t = [] {
        std::map<std::string, SectionTable> m;
        m["experiment"] = {
            {"seed", set([](ExperimentConfig& c) -> auto& { return c.seed; }, parse_number<std::uint64_t>)},
            {"threads", set([](ExperimentConfig& c) -> auto& { return c.threads; }, to_size)},
            {"out", [](ExperimentConfig& c, const std::string& v) { c.out = boost::algorithm::trim_copy(v); }},
            {"generations", set([](ExperimentConfig& c) -> auto& { return c.generations; }, to_size)},
            {"targets", set([](ExperimentConfig& c) -> auto& { return c.targets; }, to_size)},
        };
        m["grid"] = {
            {"strikes", set([](ExperimentConfig& c) -> auto& { return c.grid.strikes; }, to_size)},
            {"maturities", set([](ExperimentConfig& c) -> auto& { return c.grid.maturities; }, to_size)},
            {"spot", set([](ExperimentConfig& c) -> auto& { return c.grid.spot; }, to_double)},
            {"rate", set([](ExperimentConfig& c) -> auto& { return c.grid.rate; }, to_double)},
            {"lm_lo", set([](ExperimentConfig& c) -> auto& { return c.grid.lm_lo; }, to_double)},
            {"lm_hi", set([](ExperimentConfig& c) -> auto& { return c.grid.lm_hi; }, to_double)},
            {"tau_lo", set([](ExperimentConfig& c) -> auto& { return c.grid.tau_lo; }, to_double)},
            {"tau_hi", set([](ExperimentConfig& c) -> auto& { return c.grid.tau_hi; }, to_double)},
        };
        m["quadrature"] = {
            {"u_max", set([](ExperimentConfig& c) -> auto& { return c.quad.u_max; }, to_double)},
            {"nodes", set([](ExperimentConfig& c) -> auto& { return c.quad.n_nodes; }, to_size)},
            {"panels", set([](ExperimentConfig& c) -> auto& { return c.quad.n_panels; }, to_size)},
            {"strict", set([](ExperimentConfig& c) -> auto& { return c.quad.strict; }, to_bool)},
        };
        m["ga"] = {
            {"population", set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.population_size; }, to_size)},
            {"elite_fraction", set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.elite_fraction; }, to_double)},
            {"mutation_prob_per_param",
             set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.mutation_prob_per_param; }, to_double)},
            {"crossover_prob", set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.crossover_prob; }, to_double)},
            {"mutation_prob", set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.mutation_prob; }, to_double)},
            {"mutation_scale", set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.mutation_scale; }, to_double)},
            {"lhs_init", set([](ExperimentConfig& c) -> auto& { return c.coevo.ga.lhs_init; }, to_bool)},
        };
        m["neuro"] = {
            {"enabled", set([](ExperimentConfig& c) -> auto& { return c.coevo.networks; }, to_bool)},
            {"population", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.population_size; }, to_size)},
            {"survive_fraction",
             set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.survive_fraction; }, to_double)},
            {"weight_mut_prob", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.weight_mut_prob; }, to_double)},
            {"weight_mut_std", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.weight_mut_std; }, to_double)},
            {"arch_mut_prob", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.arch_mut_prob; }, to_double)},
            {"p_add", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.p_add; }, to_double)},
            {"p_remove", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.p_remove; }, to_double)},
            {"p_modify", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.p_modify; }, to_double)},
            {"p_activation", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.p_activation; }, to_double)},
            {"widths", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.initial_widths; }, to_sizes)},
            {"activation",
             [](ExperimentConfig& c, const std::string& v) {
                 try {
                     c.coevo.nn.initial_activation = parse_activation(boost::algorithm::trim_copy(v));
                 } catch (const std::exception& e) {
                     throw ConfigError(e.what());
                 }
             }},
        };
        m["training"] = {
            {"epochs", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.train.epochs; }, to_size)},
            {"feedback_epochs", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.feedback_epochs; }, to_size)},
            {"learning_rate",
             set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.train.learning_rate; }, to_double)},
            {"decay", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.train.decay; }, to_double)},
            {"batch_size", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.train.batch_size; }, to_size)},
            {"train_ratio", set([](ExperimentConfig& c) -> auto& { return c.coevo.nn.train.train_ratio; }, to_double)},
        };
        m["injection"] = {
            {"enabled", set([](ExperimentConfig& c) -> auto& { return c.coevo.inject; }, to_bool)},
            {"fraction", set([](ExperimentConfig& c) -> auto& { return c.coevo.inj.inject_fraction; }, to_double)},
            {"noise_std", set([](ExperimentConfig& c) -> auto& { return c.coevo.inj.noise_std; }, to_double)},
        };
        m["lbfgs"] = {
            {"max_iters", set([](ExperimentConfig& c) -> auto& { return c.lbfgs.max_iters; }, to_size)},
            {"memory", set([](ExperimentConfig& c) -> auto& { return c.lbfgs.memory; }, to_size)},
            {"fd_step", set([](ExperimentConfig& c) -> auto& { return c.lbfgs.fd_step; }, to_double)},
            {"grad_tol", set([](ExperimentConfig& c) -> auto& { return c.lbfgs.grad_tol; }, to_double)},
            {"step_tol", set([](ExperimentConfig& c) -> auto& { return c.lbfgs.step_tol; }, to_double)},
        };
        m["ttt"] = {
            {"trials", set([](ExperimentConfig& c) -> auto& { return c.ttt.trials; }, to_size)},
            {"max_generations", set([](ExperimentConfig& c) -> auto& { return c.ttt.max_generations; }, to_size)},
        };
        m["overfit"] = {
            {"n_lhs", set([](ExperimentConfig& c) -> auto& { return c.overfit.n_lhs; }, to_size)},
            {"n_test", set([](ExperimentConfig& c) -> auto& { return c.overfit.n_test; }, to_size)},
            {"generations", set([](ExperimentConfig& c) -> auto& { return c.overfit.generations; }, to_size)},
            {"epochs", set([](ExperimentConfig& c) -> auto& { return c.overfit.epochs; }, to_size)},
        };
        m["archstats"] = {
            {"checkpoints", set([](ExperimentConfig& c) -> auto& { return c.archstats.checkpoints; }, to_sizes)},
            {"samples", set([](ExperimentConfig& c) -> auto& { return c.archstats.samples; }, to_size)},
        };
        m["market"] = {
            {"chain", [](ExperimentConfig& c, const std::string& v) { c.market.chain = boost::algorithm::trim_copy(v); }},
            {"rates", [](ExperimentConfig& c, const std::string& v) { c.market.rates = boost::algorithm::trim_copy(v); }},
            {"truth", [](ExperimentConfig& c, const std::string& v) { c.market.truth = boost::algorithm::trim_copy(v); }},
            {"spot", set([](ExperimentConfig& c) -> auto& { return c.market.spot; }, to_double)},
            {"checkpoints", set([](ExperimentConfig& c) -> auto& { return c.market.checkpoints; }, to_sizes)},
            {"lhs_size", set([](ExperimentConfig& c) -> auto& { return c.market.lhs_size; }, to_size)},
            {"lhs_epochs", set([](ExperimentConfig& c) -> auto& { return c.market.lhs_epochs; }, to_size)},
            {"slice_days", set([](ExperimentConfig& c) -> auto& { return c.market.slice_days; }, parse_number<int>)},
            {"min_days", set([](ExperimentConfig& c) -> auto& { return c.market.filter.min_days; }, parse_number<int>)},
            {"max_days", set([](ExperimentConfig& c) -> auto& { return c.market.filter.max_days; }, parse_number<int>)},
            {"min_log_moneyness",
             set([](ExperimentConfig& c) -> auto& { return c.market.filter.min_log_moneyness; }, to_double)},
            {"max_log_moneyness",
             set([](ExperimentConfig& c) -> auto& { return c.market.filter.max_log_moneyness; }, to_double)},
        };
        SectionTable params, box;
        for (std::size_t i = 0; i < kNumParams; ++i) {
            params[kParamNames[i]] = [i](ExperimentConfig& c, const std::string& v) {
                auto a = c.params.to_array();
                a[i] = to_double(v);
                c.params = HestonParams::from_array(a);
            };
            box[kParamNames[i]] = [i](ExperimentConfig& c, const std::string& v) {
                auto lo = c.box.lower.to_array();
                auto hi = c.box.upper.to_array();
                std::tie(lo[i], hi[i]) = to_interval(v);
                c.box.lower = HestonParams::from_array(lo);
                c.box.upper = HestonParams::from_array(hi);
            };
        }
        m["params"] = std::move(params);
        m["box"] = std::move(box);
        return m;
    }();
    return t;
}

void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void ExperimentConfig::validate() const {
    check(threads >= 1, "threads must be >= 1");
    check(targets >= 1, "targets must be >= 1");
    check(grid.strikes >= 1 && grid.maturities >= 1, "grid needs at least one strike and one maturity");
    check(grid.spot > 0.0, "spot must be positive");
    check(grid.lm_lo <= grid.lm_hi && grid.tau_lo > 0.0 && grid.tau_lo <= grid.tau_hi, "bad grid range");
    check(market.spot > 0.0, "market spot must be positive");
    check(archstats.samples >= 1, "archstats samples must be >= 1");
    check(ttt.trials >= 1 && ttt.max_generations >= 1, "ttt trials and max_generations must be >= 1");
    check(overfit.n_lhs >= 2 && overfit.n_test >= 1, "overfit dataset sizes too small");
    check(unit_interval(coevo.nn.train.train_ratio), "train_ratio must lie in [0, 1]");
    check(!generations || *generations >= 1, "generations must be >= 1");
    try {
        box.validate();
        quad.validate();
        coevo.validate();
        lbfgs.validate();
        grid.grid().validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const auto& t = tables();
    for (const auto& [section, body] : tree) {
        const auto sec = t.find(section);
        if (sec == t.end()) {
            throw ConfigError(body.empty() ? "config: key '" + section + "' outside a section"
                                           : "config: unknown section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            try {
                setter->second(cfg, node.data());
            } catch (const ConfigError& e) {
                throw ConfigError("config: [" + section + "] " + key + ": " + e.what());
            }
        }
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

std::pair<std::size_t, std::size_t> parse_grid_spec(const std::string& s) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, s, boost::algorithm::is_any_of("xX"));
    if (parts.size() != 2) throw ConfigError("grid must look like KxT, got '" + s + "'");
    const auto k = to_size(parts[0]);
    const auto t = to_size(parts[1]);
    if (k == 0 || t == 0) throw ConfigError("grid dimensions must be positive");
    return {k, t};
}

HestonParams params_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        std::array<double, kNumParams> a{};
        for (std::size_t i = 0; i < kNumParams; ++i) a[i] = j.at(kParamNames[i]).get<double>();
        return HestonParams::from_array(a);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("parameter file: ") + e.what());
    }
}

std::string params_to_json(const HestonParams& p) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < kNumParams; ++i) j[kParamNames[i]] = p[i];
    return j.dump(2) + "\n";
}

std::string config_to_json(const ExperimentConfig& c) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["experiment"] = {{"seed", c.seed},
                       {"threads", c.threads},
                       {"out", c.out.string()},
                       {"generations", c.generations ? ordered_json(*c.generations) : ordered_json(nullptr)},
                       {"targets", c.targets}};
    j["grid"] = {{"strikes", c.grid.strikes}, {"maturities", c.grid.maturities}, {"spot", c.grid.spot},
                 {"rate", c.grid.rate},       {"lm_lo", c.grid.lm_lo},           {"lm_hi", c.grid.lm_hi},
                 {"tau_lo", c.grid.tau_lo},   {"tau_hi", c.grid.tau_hi}};
    j["quadrature"] = {
        {"u_max", c.quad.u_max}, {"nodes", c.quad.n_nodes}, {"panels", c.quad.n_panels}, {"strict", c.quad.strict}};
    const auto& ga = c.coevo.ga;
    j["ga"] = {{"population", ga.population_size},
               {"elite_fraction", ga.elite_fraction},
               {"mutation_prob_per_param", ga.mutation_prob_per_param},
               {"crossover_prob", ga.crossover_prob},
               {"mutation_prob", ga.mutation_prob},
               {"mutation_scale", ga.mutation_scale},
               {"lhs_init", ga.lhs_init}};
    const auto& nn = c.coevo.nn;
    j["neuro"] = {{"enabled", c.coevo.networks},
                  {"population", nn.population_size},
                  {"survive_fraction", nn.survive_fraction},
                  {"weight_mut_prob", nn.weight_mut_prob},
                  {"weight_mut_std", nn.weight_mut_std},
                  {"arch_mut_prob", nn.arch_mut_prob},
                  {"p_add", nn.p_add},
                  {"p_remove", nn.p_remove},
                  {"p_modify", nn.p_modify},
                  {"p_activation", nn.p_activation},
                  {"widths", nn.initial_widths},
                  {"activation", std::string(activation_name(nn.initial_activation))}};
    j["training"] = {{"epochs", nn.train.epochs},
                     {"feedback_epochs", nn.feedback_epochs},
                     {"learning_rate", nn.train.learning_rate},
                     {"decay", nn.train.decay},
                     {"batch_size", nn.train.batch_size},
                     {"train_ratio", nn.train.train_ratio}};
    j["injection"] = {
        {"enabled", c.coevo.inject}, {"fraction", c.coevo.inj.inject_fraction}, {"noise_std", c.coevo.inj.noise_std}};
    j["lbfgs"] = {{"max_iters", c.lbfgs.max_iters},
                  {"memory", c.lbfgs.memory},
                  {"fd_step", c.lbfgs.fd_step},
                  {"grad_tol", c.lbfgs.grad_tol},
                  {"step_tol", c.lbfgs.step_tol}};
    j["ttt"] = {{"trials", c.ttt.trials}, {"max_generations", c.ttt.max_generations}};
    j["overfit"] = {{"n_lhs", c.overfit.n_lhs},
                    {"n_test", c.overfit.n_test},
                    {"generations", c.overfit.generations},
                    {"epochs", c.overfit.epochs}};
    j["archstats"] = {{"checkpoints", c.archstats.checkpoints}, {"samples", c.archstats.samples}};
    j["market"] = {{"chain", c.market.chain.string()},
                   {"rates", c.market.rates.string()},
                   {"truth", c.market.truth.string()},
                   {"spot", c.market.spot},
                   {"checkpoints", c.market.checkpoints},
                   {"lhs_size", c.market.lhs_size},
                   {"lhs_epochs", c.market.lhs_epochs},
                   {"slice_days", c.market.slice_days},
                   {"min_days", c.market.filter.min_days},
                   {"max_days", c.market.filter.max_days},
                   {"min_log_moneyness", c.market.filter.min_log_moneyness},
                   {"max_log_moneyness", c.market.filter.max_log_moneyness}};
    ordered_json params, box;
    for (std::size_t i = 0; i < kNumParams; ++i) {
        params[kParamNames[i]] = c.params[i];
        box[kParamNames[i]] = {c.box.lower[i], c.box.upper[i]};
    }
    j["params"] = params;
    j["box"] = box;
    return j.dump(2) + "\n";
}

}  // namespace coevo
