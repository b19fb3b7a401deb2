#pragma once

#include <filesystem>
#include <iosfwd>

#include "tensorm/tensor.hpp"

namespace tensorm {

/// How entries not listed in a sparse coordinate file are interpreted.
enum class SparseDefault { Missing, Zero };

/// Dense binary layout:
///   "BTNSR1" | K:u32le | N_1..N_K:u32le | prod(N_k) signed bytes in {-1,0,1}
void save_dense(std::ostream& out, const ObservedTensor& t);
ObservedTensor load_dense(std::istream& in);

/// Sparse coordinate text layout:
///   dims: N1 ... NK
///   default: missing|zero
///   i1 ... iK v        (one line per listed entry, 0-based, v in {0,1})
///
/// With `SparseDefault::Missing` every observed entry is listed. With
/// `SparseDefault::Zero` only ones are listed and the tensor must not
/// contain missing entries (throws ArgumentError otherwise).
void save_sparse(std::ostream& out, const ObservedTensor& t, SparseDefault unlisted);
ObservedTensor load_sparse(std::istream& in);

/// Reads either format, detected from the leading magic bytes.
ObservedTensor load_tensor(const std::filesystem::path& path);

void save_dense(const std::filesystem::path& path, const ObservedTensor& t);
void save_sparse(const std::filesystem::path& path, const ObservedTensor& t, SparseDefault unlisted);

} // namespace tensorm
