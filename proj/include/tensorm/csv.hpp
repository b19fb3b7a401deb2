#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "tensorm/model.hpp"
#include "tensorm/reconstruct.hpp"
#include "tensorm/tensor.hpp"

namespace tensorm {

/// Binary factor matrix: header "l<label>,...", one row of 0/1 per index.
void write_factor_csv(std::ostream& out, const FactorMatrix& f, std::span<const int> labels);

/// Posterior-mean factor matrix, same layout with values in [0, 1].
void write_mean_csv(std::ostream& out, const RealMatrix& mean, std::span<const int> labels);

/// Reads a binary factor CSV; returns the matrix and its labels.
std::pair<FactorMatrix, std::vector<int>> read_factor_csv(std::istream& in);

/// Per-entry probabilities: header "i0,...,i{K-1},probability,prediction".
/// With `only_missing_in` set, rows are restricted to entries missing in it.
void write_probability_csv(std::ostream& out, const Reconstruction& recon,
                           const ObservedTensor* only_missing_in = nullptr);

} // namespace tensorm
