#pragma once

#include <vector>

#include "sheafcoord/operators.hpp"

namespace sheafcoord {

inline constexpr double kDefaultNullTol = 1e-9;

/// Orthonormal basis of H^0 = ker delta.
struct SectionBasis {
  std::size_t dimension = 0;
  std::vector<Cochain0> basis;
};

namespace detail {

struct CoboundarySpectrum {
  Vector singular_values;  // descending
  Matrix right_vectors;    // full V, columns match singular_values then the rest
  std::size_t rank = 0;
};

inline CoboundarySpectrum coboundary_spectrum(const CellularSheaf& sheaf, double null_tol) {
  if (!(null_tol > 0)) throw std::invalid_argument("null_tol must be positive");
  const Matrix d = coboundary_dense(sheaf);
  CoboundarySpectrum out;
  if (d.rows() == 0) {
    out.right_vectors = Matrix::Identity(d.cols(), d.cols());
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  out.right_vectors = svd.matrixV();
  const double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  if (smax > 0) {
    for (Eigen::Index k = 0; k < out.singular_values.size(); ++k)
      if (out.singular_values(k) >= null_tol * smax) ++out.rank;
  }
  return out;
}

}  // namespace detail

/// Numerical rank of delta: singular values below null_tol * sigma_max count as zero.
inline std::size_t coboundary_rank(const CellularSheaf& sheaf, double null_tol = kDefaultNullTol) {
  return detail::coboundary_spectrum(sheaf, null_tol).rank;
}

inline SectionBasis global_section_basis(const CellularSheaf& sheaf, double null_tol = kDefaultNullTol) {
  auto sv = detail::coboundary_spectrum(sheaf, null_tol);
  SectionBasis out;
  const auto n = sv.right_vectors.cols();
  for (auto k = static_cast<Eigen::Index>(sv.rank); k < n; ++k) {
    out.basis.push_back(sheaf.cochain0(sv.right_vectors.col(k)));
  }
  out.dimension = out.basis.size();
  return out;
}

inline std::size_t h0_dimension(const CellularSheaf& sheaf, double null_tol = kDefaultNullTol) {
  return sheaf.c0_dim() - coboundary_rank(sheaf, null_tol);
}

/// dim H^1 = dim C^1 - rank delta.
inline std::size_t h1_dimension(const CellularSheaf& sheaf, double null_tol = kDefaultNullTol) {
  return sheaf.c1_dim() - coboundary_rank(sheaf, null_tol);
}

inline bool is_global_section(const CellularSheaf& sheaf, const Cochain0& x, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("is_global_section: tol must be positive");
  return apply_coboundary(sheaf, x).max_abs() <= tol;
}

}  // namespace sheafcoord
