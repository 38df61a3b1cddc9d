// SPDX-License-Identifier: Apache-2.0
//
// Shared plumbing types: the per-MS stream assignment and the structured
// subspace plan produced by the allocator. The plan fixes, for every MS,
// the core precoder directions (used verbatim as the fixed part of the
// intermediate precoder), the transmit free space the precoder may shift
// into, and the receive subspace the decorrelator is confined to.

#pragma once

#include <armadillo>

#include <stdexcept>
#include <vector>

#include "iacell/network.hpp"
#include "iacell/subspace.hpp"

namespace iacell {

struct StreamAssignment {
  arma::imat d;  // G x K

  int streams(int g, int k) const {
    return static_cast<int>(d(static_cast<arma::uword>(g), static_cast<arma::uword>(k)));
  }
  int total() const { return static_cast<int>(arma::accu(d)); }
  int cell_total(int g) const {
    return static_cast<int>(arma::accu(d.row(static_cast<arma::uword>(g))));
  }
};

inline void validate(const StreamAssignment& a, const NetworkConfig& cfg) {
  if (a.d.n_rows != static_cast<arma::uword>(cfg.num_bs) ||
      a.d.n_cols != static_cast<arma::uword>(cfg.ms_per_bs)) {
    throw std::invalid_argument("assignment: shape disagrees with config");
  }
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      const int d = a.streams(g, k);
      if (d < 0 || d > cfg.nr(g, k)) {
        throw std::invalid_argument("assignment: streams outside [0, Nr]");
      }
    }
    if (a.cell_total(g) > cfg.nt(g)) {
      throw std::invalid_argument("assignment: cell total exceeds Nt");
    }
  }
}

struct MsPlan {
  Subspace core;     // dim d, in C^{Nt}; basis doubles as the fixed precoder part
  Subspace free_tx;  // transmit free space, orthogonal to every core of the cell
  Subspace receive;  // dim d + extra, in C^{Nr}
};

struct SubspacePlan {
  int ms_per_bs = 0;
  std::vector<MsPlan> ms;  // index g*K + k

  const MsPlan& at(int g, int k) const {
    return ms.at(static_cast<size_t>(g * ms_per_bs + k));
  }
  MsPlan& at(int g, int k) {
    return ms.at(static_cast<size_t>(g * ms_per_bs + k));
  }
};

// Full-structure plan: cores fill the leading complement directions, every
// MS of a cell shares the cell-wide residual transmit space, and receivers
// keep their whole antenna space. This is the structure an allocator that
// ignores partial connectivity would use.
inline SubspacePlan make_full_structure_plan(const NetworkConfig& cfg,
                                             const StreamAssignment& d) {
  validate(d, cfg);
  SubspacePlan plan;
  plan.ms_per_bs = cfg.ms_per_bs;
  plan.ms.resize(static_cast<size_t>(cfg.links()));
  for (int g = 0; g < cfg.num_bs; ++g) {
    const arma::uword nt = static_cast<arma::uword>(cfg.nt(g));
    const arma::cx_mat eye = arma::eye<arma::cx_mat>(nt, nt);
    arma::uword next = 0;
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      MsPlan& m = plan.at(g, k);
      const arma::uword dk = static_cast<arma::uword>(d.streams(g, k));
      m.core = dk > 0 ? Subspace{eye.cols(next, next + dk - 1).eval()}
                      : zero_subspace(nt);
      next += dk;
    }
    const Subspace shared =
        next < nt ? Subspace{eye.cols(next, nt - 1).eval()} : zero_subspace(nt);
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      plan.at(g, k).free_tx = shared;
      plan.at(g, k).receive = full_subspace(static_cast<arma::uword>(cfg.nr(g, k)));
    }
  }
  return plan;
}

}  // namespace iacell
