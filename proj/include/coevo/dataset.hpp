#pragma once

#include "coevo/params.hpp"

#include <string>
#include <utility>
#include <vector>

namespace coevo {

/// One (flattened surface, generating parameters) training pair.
struct SurfaceSample {
    std::vector<double> surface;
    HestonParams params;
};

using Dataset = std::vector<SurfaceSample>;

/// Uniform shuffle, then the first ceil(train_ratio * n) samples train and the rest validate.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_ratio, Rng& rng);

/// Like split, but samples with identical parameters always land on the same side.
/// Whole groups are shuffled and assigned until the training side holds at least ceil(train_ratio * n)
/// samples. With no duplicates this is exactly split.
std::pair<Dataset, Dataset> split_grouped(const Dataset& data, double train_ratio, Rng& rng);

/// One row per pair: kappa,lambda,sigma,rho,v0,p0..p{KT-1}.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

}  // namespace coevo
