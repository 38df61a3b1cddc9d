// SPDX-License-Identifier: Apache-2.0
//
// Small dense toolkit for complex linear subspaces. A subspace of C^n is
// held as an orthonormal column basis; the zero subspace is a basis with
// zero columns that still remembers the ambient dimension. All rank
// decisions use a singular-value threshold relative to the largest singular
// value so that the toolkit behaves consistently across compositions.

#pragma once

#include <armadillo>

#include <stdexcept>

namespace iacell {

// Relative singular-value cut-off for every rank decision.
inline constexpr double kRankTol = 1e-9;
// Frobenius distance between orthogonal projectors below which two
// subspaces are treated as equal.
inline constexpr double kSubspaceEqTol = 1e-8;

struct Subspace {
  arma::cx_mat basis;  // ambient x dim, orthonormal columns

  arma::uword ambient() const { return basis.n_rows; }
  arma::uword dim() const { return basis.n_cols; }
  arma::cx_mat projector() const { return basis * basis.t(); }
};

inline Subspace zero_subspace(arma::uword ambient) {
  return {arma::cx_mat(ambient, 0)};
}

inline Subspace full_subspace(arma::uword ambient) {
  return {arma::cx_mat(arma::eye<arma::cx_mat>(ambient, ambient))};
}

// Orthonormal basis of the column space of m. A matrix with no columns, or
// with all singular values below tol * sigma_max, yields the zero subspace.
inline Subspace column_space(const arma::cx_mat& m, double tol = kRankTol) {
  if (m.n_rows == 0) throw std::invalid_argument("column_space: empty ambient");
  if (m.n_cols == 0) return zero_subspace(m.n_rows);
  arma::cx_mat u;
  arma::vec s;
  arma::cx_mat v;
  if (!arma::svd_econ(u, s, v, m)) {
    throw std::runtime_error("column_space: SVD failed");
  }
  const double smax = s.empty() ? 0.0 : s.max();
  arma::uword rank = 0;
  while (rank < s.n_elem && s(rank) > tol * smax && smax > 0.0) ++rank;
  if (rank == 0) return zero_subspace(m.n_rows);
  return {u.head_cols(rank).eval()};
}

// Orthonormal basis of the (right) null space of m: all x with m x = 0.
inline Subspace null_space(const arma::cx_mat& m, double tol = kRankTol) {
  if (m.n_cols == 0) throw std::invalid_argument("null_space: no columns");
  arma::cx_mat u;
  arma::vec s;
  arma::cx_mat v;
  if (!arma::svd(u, s, v, m)) {
    throw std::runtime_error("null_space: SVD failed");
  }
  const double smax = s.empty() ? 0.0 : s.max();
  arma::uword rank = 0;
  while (rank < s.n_elem && s(rank) > tol * smax && smax > 0.0) ++rank;
  if (rank >= v.n_cols) return zero_subspace(m.n_cols);
  return {v.cols(rank, v.n_cols - 1).eval()};
}

// Orthogonal complement within the ambient space.
inline Subspace complement(const Subspace& s, double tol = kRankTol) {
  if (s.dim() == 0) return full_subspace(s.ambient());
  if (s.dim() == s.ambient()) return zero_subspace(s.ambient());
  return null_space(arma::cx_mat(s.basis.t()), tol);
}

// Span of the union of the two subspaces.
inline Subspace subspace_sum(const Subspace& a, const Subspace& b,
                             double tol = kRankTol) {
  if (a.ambient() != b.ambient()) {
    throw std::invalid_argument("subspace_sum: ambient mismatch");
  }
  if (a.dim() == 0) return b;
  if (b.dim() == 0) return a;
  return column_space(arma::join_rows(a.basis, b.basis), tol);
}

// Intersection, computed as the joint null space of the two complement
// projectors: x lies in both spans iff (I - Pa) x = 0 and (I - Pb) x = 0.
inline Subspace intersect(const Subspace& a, const Subspace& b,
                          double tol = kRankTol) {
  if (a.ambient() != b.ambient()) {
    throw std::invalid_argument("intersect: ambient mismatch");
  }
  const arma::uword n = a.ambient();
  if (a.dim() == 0 || b.dim() == 0) return zero_subspace(n);
  if (a.dim() == n) return b;
  if (b.dim() == n) return a;
  const arma::cx_mat eye = arma::eye<arma::cx_mat>(n, n);
  const arma::cx_mat stacked =
      arma::join_cols(eye - a.projector(), eye - b.projector());
  return null_space(stacked, tol);
}

inline bool subspace_equal(const Subspace& a, const Subspace& b,
                           double tol = kSubspaceEqTol) {
  if (a.ambient() != b.ambient() || a.dim() != b.dim()) return false;
  return arma::norm(a.projector() - b.projector(), "fro") < tol;
}

// True iff span(inner) is contained in span(outer).
inline bool contains(const Subspace& outer, const Subspace& inner,
                     double tol = kSubspaceEqTol) {
  if (outer.ambient() != inner.ambient()) {
    throw std::invalid_argument("contains: ambient mismatch");
  }
  if (inner.dim() == 0) return true;
  if (outer.dim() == 0) return false;
  const arma::cx_mat residual =
      inner.basis - outer.projector() * inner.basis;
  return arma::norm(residual, "fro") < tol;
}

}  // namespace iacell
