#include "coevo/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace coevo {

bool is_valid(const HestonParams& p) {
    for (double x : p.to_array()) {
        if (!std::isfinite(x)) return false;
    }
    return p.kappa > 0.0 && p.lambda > 0.0 && p.sigma > 0.0 && p.v0 > 0.0 && p.rho >= -1.0 && p.rho <= 1.0;
}

std::array<double, kNumParams> ParamBox::ranges() const {
    std::array<double, kNumParams> r{};
    for (std::size_t i = 0; i < kNumParams; ++i) r[i] = range(i);
    return r;
}

void ParamBox::validate() const {
    for (std::size_t i = 0; i < kNumParams; ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
            throw std::invalid_argument(std::string("non-finite bound for ") + kParamNames[i]);
        }
        if (lower[i] > upper[i]) {
            throw std::invalid_argument(std::string("lower > upper for ") + kParamNames[i]);
        }
    }
    if (lower.rho < -1.0 || upper.rho > 1.0) throw std::invalid_argument("rho bounds outside [-1, 1]");
}

bool ParamBox::contains(const HestonParams& p) const {
    for (std::size_t i = 0; i < kNumParams; ++i) {
        if (!(p[i] >= lower[i] && p[i] <= upper[i])) return false;
    }
    return true;
}

std::array<double, kNumParams> ParamBox::to_unit(const HestonParams& p) const {
    std::array<double, kNumParams> u{};
    for (std::size_t i = 0; i < kNumParams; ++i) {
        const double r = range(i);
        u[i] = r > 0.0 ? (p[i] - lower[i]) / r : 0.5;
    }
    return u;
}

HestonParams ParamBox::from_unit(const std::array<double, kNumParams>& u) const {
    std::array<double, kNumParams> a{};
    for (std::size_t i = 0; i < kNumParams; ++i) a[i] = lower[i] + u[i] * range(i);
    return HestonParams::from_array(a);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ParamBox parse_param_box(const std::string& text) {
    static const std::regex line_re(R"(^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*\[\s*([^,\]]+)\s*,\s*([^\]]+)\]\s*$)");
    ParamBox box = ParamBox::table_default();
    auto lo = box.lower.to_array();
    auto hi = box.upper.to_array();
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) {
            throw std::invalid_argument("box file line " + std::to_string(line_no) + ": expected `name = [low, high]`");
        }
        const auto it = std::find(kParamNames.begin(), kParamNames.end(), m[1].str());
        if (it == kParamNames.end()) {
            throw std::invalid_argument("box file line " + std::to_string(line_no) + ": unknown parameter " + m[1].str());
        }
        const auto idx = static_cast<std::size_t>(it - kParamNames.begin());
        try {
            lo[idx] = std::stod(trim(m[2].str()));
            hi[idx] = std::stod(trim(m[3].str()));
        } catch (const std::exception&) {
            throw std::invalid_argument("box file line " + std::to_string(line_no) + ": bad number");
        }
    }
    box.lower = HestonParams::from_array(lo);
    box.upper = HestonParams::from_array(hi);
    box.validate();
    return box;
}

ParamBox load_param_box(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open box file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_param_box(ss.str());
}

std::string format_param_box(const ParamBox& box) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < kNumParams; ++i) {
        out << kParamNames[i] << " = [" << box.lower[i] << ", " << box.upper[i] << "]\n";
    }
    return out.str();
}

RateCurve::RateCurve(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) throw std::invalid_argument("rate curve needs at least one knot");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!std::isfinite(knots_[i].first) || !std::isfinite(knots_[i].second)) {
            throw std::invalid_argument("rate curve knots must be finite");
        }
        if (i > 0 && !(knots_[i].first > knots_[i - 1].first)) {
            throw std::invalid_argument("rate curve maturities must be strictly ascending");
        }
    }
}

double RateCurve::rate(double tau) const {
    if (tau <= knots_.front().first) return knots_.front().second;
    if (tau >= knots_.back().first) return knots_.back().second;
    const auto hi = std::upper_bound(knots_.begin(), knots_.end(), tau,
                                     [](double t, const auto& k) { return t < k.first; });
    const auto lo = hi - 1;
    const double w = (tau - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

void MarketContext::validate() const {
    if (!(spot > 0.0) || !std::isfinite(spot)) throw std::invalid_argument("spot must be positive");
}

HestonParams clamp(const HestonParams& p, const ParamBox& box) {
    auto a = p.to_array();
    for (std::size_t i = 0; i < kNumParams; ++i) {
        a[i] = std::clamp(a[i], box.lower[i], box.upper[i]);
    }
    auto out = HestonParams::from_array(a);
    out.lambda = std::max(out.lambda, kVarianceFloor);
    out.v0 = std::max(out.v0, kVarianceFloor);
    return out;
}

bool feller_satisfied(const HestonParams& p) { return 2.0 * p.kappa * p.lambda > p.sigma * p.sigma; }

std::vector<HestonParams> sample_uniform(const ParamBox& box, std::size_t n, Rng& rng) {
    std::vector<HestonParams> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::array<double, kNumParams> a{};
        for (std::size_t i = 0; i < kNumParams; ++i) a[i] = rng.uniform(box.lower[i], box.upper[i]);
        out.push_back(clamp(HestonParams::from_array(a), box));
    }
    return out;
}

std::vector<HestonParams> sample_lhs(const ParamBox& box, std::size_t n, Rng& rng) {
    std::vector<std::array<double, kNumParams>> unit(n);
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < kNumParams; ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        for (std::size_t s = 0; s < n; ++s) {
            const double stratum = static_cast<double>(perm[s]);
            unit[s][d] = (stratum + rng.uniform()) / static_cast<double>(n);
        }
    }
    std::vector<HestonParams> out;
    out.reserve(n);
    for (const auto& u : unit) out.push_back(clamp(box.from_unit(u), box));
    return out;
}

std::string to_string(const HestonParams& p) {
    std::ostringstream out;
    out.precision(6);
    out << "(kappa=" << p.kappa << ", lambda=" << p.lambda << ", sigma=" << p.sigma << ", rho=" << p.rho
        << ", v0=" << p.v0 << ")";
    return out.str();
}

}  // namespace coevo
