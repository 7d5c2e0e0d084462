#include "coevo/market_io.hpp"

#include "coevo/log.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace coevo {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
    std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::optional<double> to_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<OptionType> to_type(const std::string& s) {
    const auto t = lower(s);
    if (t == "call" || t == "c") return OptionType::Call;
    if (t == "put" || t == "p") return OptionType::Put;
    return std::nullopt;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Piecewise-linear interpolation with flat extrapolation over sorted (x, y) pairs.
double interp_flat(const std::vector<std::pair<double, double>>& xy, double x) {
    if (x <= xy.front().first) return xy.front().second;
    if (x >= xy.back().first) return xy.back().second;
    const auto hi = std::ranges::upper_bound(xy, x, {}, &std::pair<double, double>::first);
    const auto lo = hi - 1;
    const double w = (x - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

}  // namespace

std::vector<OptionQuote> parse_chain(const std::string& text, ChainLoadReport* report) {
    ChainLoadReport rep;
    std::vector<OptionQuote> quotes;
    std::istringstream in(text);
    std::string line;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) {
        if (report) *report = rep;
        return quotes;
    }
    const auto header = split_row(line);
    for (std::size_t i = 0; i < header.size(); ++i) col[lower(header[i])] = i;
    const bool has_mid = col.contains("mid");
    const bool has_bid_ask = col.contains("bid") && col.contains("ask");
    for (const char* need : {"type", "strike", "expiry_days"}) {
        if (!col.contains(need)) throw std::invalid_argument(std::string("option chain lacks column '") + need + "'");
    }
    if (!has_mid && !has_bid_ask) throw std::invalid_argument("option chain needs bid/ask or mid columns");

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++rep.rows;
        const auto cells = split_row(line);
        auto cell = [&](const char* name) -> std::string {
            const auto i = col.at(name);
            return i < cells.size() ? cells[i] : std::string{};
        };
        const auto type = to_type(cell("type"));
        const auto strike = to_number(cell("strike"));
        const auto days = to_number(cell("expiry_days"));
        std::optional<double> mid;
        bool crossed = false;
        if (has_bid_ask) {
            const auto bid = to_number(cell("bid"));
            const auto ask = to_number(cell("ask"));
            if (bid && ask) {
                crossed = *bid > *ask;
                mid = 0.5 * (*bid + *ask);
            }
        }
        if (!mid && has_mid) mid = to_number(cell("mid"));
        if (!type || !strike || !days || !mid || !(*strike > 0.0) || *days < 1.0 || std::floor(*days) != *days) {
            ++rep.malformed;
            continue;
        }
        if (crossed) {
            ++rep.crossed;
            continue;
        }
        if (!(*mid > 0.0)) {
            ++rep.non_positive;
            continue;
        }
        quotes.push_back({*type, *strike, static_cast<int>(*days), *mid});
    }
    rep.kept = quotes.size();
    if (rep.malformed + rep.crossed + rep.non_positive > 0) {
        log::warn(fmt::format("option chain: {} rows, kept {}, malformed {}, crossed {}, non-positive {}", rep.rows,
                              rep.kept, rep.malformed, rep.crossed, rep.non_positive));
    }
    if (report) *report = rep;
    return quotes;
}

std::vector<OptionQuote> load_chain(const std::filesystem::path& path, ChainLoadReport* report) {
    return parse_chain(read_file(path), report);
}

std::string chain_to_csv(const std::vector<OptionQuote>& quotes, double half_spread) {
    std::string out = "type,strike,expiry_days,bid,ask\n";
    for (const auto& q : quotes) {
        const double h = std::min(half_spread, 0.5 * q.mid);
        out += fmt::format("{},{:.17g},{},{:.17g},{:.17g}\n", q.type == OptionType::Call ? "call" : "put", q.strike,
                           q.expiry_days, q.mid - h, q.mid + h);
    }
    return out;
}

std::vector<OptionQuote> filter_quotes(const std::vector<OptionQuote>& quotes, double spot, const QuoteFilter& f) {
    std::vector<OptionQuote> out;
    for (const auto& q : quotes) {
        const double lm = std::log(q.strike / spot);
        if (q.expiry_days >= f.min_days && q.expiry_days <= f.max_days && lm >= f.min_log_moneyness &&
            lm <= f.max_log_moneyness) {
            out.push_back(q);
        }
    }
    return out;
}

RateCurve curve_from_weeks(const std::vector<std::pair<double, double>>& weeks_percent) {
    std::vector<std::pair<double, double>> knots;
    knots.reserve(weeks_percent.size());
    for (const auto& [weeks, pct] : weeks_percent) knots.emplace_back(weeks * kDaysPerWeek / kDaysPerYear, pct / 100.0);
    return RateCurve(std::move(knots));
}

RateCurve default_treasury_curve() {
    return curve_from_weeks({{4, 4.24}, {6, 4.23}, {13, 4.23}, {17, 4.19}, {26, 4.07}, {52, 3.77}});
}

RateCurve parse_rates_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("rates file is empty");
    std::map<std::string, std::size_t> col;
    const auto header = split_row(line);
    for (std::size_t i = 0; i < header.size(); ++i) col[lower(header[i])] = i;
    if (!col.contains("weeks") || !col.contains("rate_percent")) {
        throw std::invalid_argument("rates file needs columns weeks,rate_percent");
    }
    std::vector<std::pair<double, double>> knots;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        auto field = [&](const char* name) {
            const auto i = col.at(name);
            return to_number(i < cells.size() ? cells[i] : std::string{});
        };
        const auto w = field("weeks");
        const auto r = field("rate_percent");
        if (!w || !r) throw std::invalid_argument("malformed rates row: " + line);
        knots.emplace_back(w.value(), r.value());
    }
    if (knots.empty()) throw std::invalid_argument("rates file has no rows");
    return curve_from_weeks(knots);
}

RateCurve load_rates(const std::filesystem::path& path) { return parse_rates_csv(read_file(path)); }

std::string rates_to_csv(const RateCurve& curve) {
    std::string out = "weeks,rate_percent\n";
    for (const auto& [years, rate] : curve.knots()) {
        out += fmt::format("{:.12g},{:.12g}\n", years * kDaysPerYear / kDaysPerWeek, rate * 100.0);
    }
    return out;
}

double put_to_call(double put, double spot, double strike, double rate, double tau) {
    return put + spot - strike * std::exp(-rate * tau);
}

double call_to_put(double call, double spot, double strike, double rate, double tau) {
    return call - spot + strike * std::exp(-rate * tau);
}

MarketTarget assemble_target(const std::vector<OptionQuote>& quotes, double spot, const RateCurve& curve) {
    MarketTarget t;
    t.ctx = {spot, curve};
    t.ctx.validate();
    for (const auto& q : quotes) {
        if (!(q.strike > 0.0) || q.expiry_days < 1 || !(q.mid >= 0.0)) continue;
        const double tau = q.expiry_days / kDaysPerYear;
        const double price =
            q.type == OptionType::Call ? q.mid : put_to_call(q.mid, spot, q.strike, curve.rate(tau), tau);
        t.target.cells.push_back({q.strike, tau});
        t.target.prices.push_back(price);
    }
    if (t.target.cells.empty()) throw std::invalid_argument("no usable option quotes");
    return t;
}

std::vector<double> interpolate_to_grid(const CalibrationTarget& target, const SurfaceGrid& grid) {
    if (target.cells.empty()) throw std::invalid_argument("cannot interpolate an empty target");
    // Slice by maturity, averaging duplicate strikes.
    std::map<double, std::map<double, std::pair<double, int>>> slices;
    for (std::size_t m = 0; m < target.cells.size(); ++m) {
        auto& acc = slices[target.cells[m].tau][std::log(target.cells[m].strike)];
        acc.first += target.prices[m];
        acc.second += 1;
    }
    std::vector<std::pair<double, std::vector<std::pair<double, double>>>> curves;
    for (const auto& [tau, pts] : slices) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& [lk, acc] : pts) xy.emplace_back(lk, acc.first / acc.second);
        curves.emplace_back(tau, std::move(xy));
    }
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.n_strikes(); ++i) {
        const double lk = std::log(grid.strikes[i]);
        std::vector<std::pair<double, double>> across;
        for (const auto& [tau, xy] : curves) across.emplace_back(tau, interp_flat(xy, lk));
        for (std::size_t j = 0; j < grid.n_maturities(); ++j) {
            out[i * grid.n_maturities() + j] = interp_flat(across, grid.maturities[j]);
        }
    }
    return out;
}

std::vector<OptionQuote> synthesize_chain(const HestonParams& p, const MarketContext& ctx, const ChainSpec& spec) {
    std::vector<OptionQuote> quotes;
    for (int days : spec.expiry_days) {
        const double tau = days / kDaysPerYear;
        const double r = ctx.rate(tau);
        std::vector<double> strikes;
        for (double lm : spec.log_moneyness) {
            const double k = std::round(ctx.spot * std::exp(lm) / spec.strike_step) * spec.strike_step;
            if (k > 0.0 && std::ranges::find(strikes, k) == strikes.end()) strikes.push_back(k);
        }
        const std::vector<PricingCell> cells = [&] {
            std::vector<PricingCell> c;
            for (double k : strikes) c.push_back({k, tau});
            return c;
        }();
        const auto calls = price_cells(p, ctx, cells);
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            const bool put = strikes[i] < ctx.spot;
            const double model = put ? call_to_put(calls[i], ctx.spot, strikes[i], r, tau) : calls[i];
            const double mid = std::round(model / spec.tick) * spec.tick;
            if (mid < spec.min_price) continue;
            quotes.push_back({put ? OptionType::Put : OptionType::Call, strikes[i], days, mid});
        }
    }
    return quotes;
}

std::string target_manifest_json(const MarketTarget& t) {
    nlohmann::json j;
    j["spot"] = t.ctx.spot;
    j["cells"] = t.target.size();
    std::vector<double> taus;
    double kmin = t.target.cells.front().strike;
    double kmax = kmin;
    for (const auto& c : t.target.cells) {
        taus.push_back(c.tau);
        kmin = std::min(kmin, c.strike);
        kmax = std::max(kmax, c.strike);
    }
    std::ranges::sort(taus);
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    j["maturities"] = taus;
    j["strike_range"] = {kmin, kmax};
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& [tau, r] : t.ctx.rate_curve.knots()) knots.push_back({tau, r});
    j["rate_knots"] = knots;
    return j.dump(2);
}

}  // namespace coevo
