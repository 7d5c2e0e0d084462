#include "coevo/dataset.hpp"

#include "coevo/log.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coevo {

std::pair<Dataset, Dataset> split(const Dataset& data, double train_ratio, Rng& rng) {
    if (!(train_ratio > 0.0 && train_ratio <= 1.0)) throw std::invalid_argument("train ratio must be in (0, 1]");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const auto n_train = std::min(
        data.size(), static_cast<std::size_t>(std::ceil(train_ratio * static_cast<double>(data.size()) - 1e-9)));
    if (data.size() == 1) log::warn("dataset of one sample: validation split is empty");
    std::pair<Dataset, Dataset> out;
    out.first.reserve(n_train);
    out.second.reserve(data.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(data[order[i]]);
    }
    return out;
}

std::pair<Dataset, Dataset> split_grouped(const Dataset& data, double train_ratio, Rng& rng) {
    if (!(train_ratio > 0.0 && train_ratio <= 1.0)) throw std::invalid_argument("train ratio must be in (0, 1]");
    std::map<std::array<double, kNumParams>, std::size_t> group_of;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto [it, inserted] = group_of.try_emplace(data[i].params.to_array(), groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const auto n_train = std::min(
        data.size(), static_cast<std::size_t>(std::ceil(train_ratio * static_cast<double>(data.size()) - 1e-9)));
    std::pair<Dataset, Dataset> out;
    for (auto g : order) {
        auto& side = out.first.size() < n_train ? out.first : out.second;
        for (auto i : groups[g]) side.push_back(data[i]);
    }
    return out;
}

std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    out.precision(17);
    out << "kappa,lambda,sigma,rho,v0";
    const std::size_t width = data.empty() ? 0 : data.front().surface.size();
    for (std::size_t i = 0; i < width; ++i) out << ",p" << i;
    out << '\n';
    for (const auto& s : data) {
        const auto a = s.params.to_array();
        out << a[0];
        for (std::size_t i = 1; i < a.size(); ++i) out << ',' << a[i];
        for (double x : s.surface) out << ',' << x;
        out << '\n';
    }
    return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Dataset data;
    if (!std::getline(in, line)) return data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> values;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() < kNumParams) throw std::invalid_argument("dataset row too short");
        SurfaceSample s;
        std::array<double, kNumParams> a{};
        std::copy_n(values.begin(), kNumParams, a.begin());
        s.params = HestonParams::from_array(a);
        s.surface.assign(values.begin() + kNumParams, values.end());
        data.push_back(std::move(s));
    }
    return data;
}

}  // namespace coevo
