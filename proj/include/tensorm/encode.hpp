#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tensorm/tensor.hpp"

namespace tensorm {

/// Objects x attributes matrix of reals with per-cell missing markers.
struct ContinuousMatrix {
    std::vector<std::string> object_ids;
    std::vector<std::string> attribute_names;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;

    /// Unlabelled matrix; objects and attributes are named by their index.
    static ContinuousMatrix from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                                        std::vector<std::uint8_t> missing = {});

    double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
    bool is_missing(std::size_t r, std::size_t c) const noexcept { return missing[r * cols + c] != 0; }
};

/// CSV with a header row of attribute names (first header cell ignored)
/// and the object id in the first column. Empty cells are missing.
ContinuousMatrix read_matrix_csv(std::istream& in);

/// Per-attribute standardisation to mean 0 and sample standard deviation 1
/// over non-missing cells. Throws ArgumentError naming the attribute when
/// it has fewer than two values or zero variance.
ContinuousMatrix zscore_normalize(const ContinuousMatrix& m);

/// [objects, attributes, attributes] tensor: (o, i, j) is observed one if
/// value(o,i) > value(o,j) + tie_epsilon, observed zero if
/// value(o,i) < value(o,j) - tie_epsilon, missing otherwise (including the
/// diagonal and any pair touching a missing cell). Throws ArgumentError
/// with fewer than two attributes.
ObservedTensor relational_encode(const ContinuousMatrix& m, double tie_epsilon = 0.0);

/// Sidecar labels, one line per index: "object\t<i>\t<id>" then
/// "attribute\t<j>\t<name>".
void write_name_map(std::ostream& out, const ContinuousMatrix& m);

} // namespace tensorm
