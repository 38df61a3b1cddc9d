// SPDX-License-Identifier: Apache-2.0
//
// Stage-2 and stage-3 transceiver computation. suppress_inter_cell runs the
// alternating minimization of inter-cell interference leakage over
// structured precoders V = V_core + S_tx * V_free and receive filters
// U = S_rx * U_free: the U step keeps the least-interfered directions of
// each receive space, the V step has a closed-form least-squares solution.
// zero_force_intra_cell then rotates each cell's aggregate precoder so that
// every MS only sees its own streams, without leaving the aggregate span
// (which would break the inter-cell alignment). naive_iteration is the
// unstructured total-leakage baseline.

#pragma once

#include <armadillo>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iacell/network.hpp"
#include "iacell/plan.hpp"
#include "iacell/rng.hpp"
#include "iacell/subspace.hpp"

namespace iacell {

// Precoders and decorrelators for every MS. v_int are the structured
// intermediate precoders (inter-cell aligned), v the final ones after
// intra-cell zero forcing; both are Nt x d with orthonormal columns, u is
// Nr x d orthonormal. MSs with zero streams carry empty matrices.
struct TransceiverSet {
  StreamAssignment d;
  std::vector<arma::cx_mat> v_int;
  std::vector<arma::cx_mat> v;
  std::vector<arma::cx_mat> u;
  bool zf_rank_ok = true;
};

struct SuppressOptions {
  int max_iters = 2000;
  double rel_tol = 1e-10;    // stop when one sweep improves less than this
  double abs_floor = 1e-24;  // leakage below this counts as aligned
  std::uint64_t seed = 0;    // initial free-precoder randomization
  bool validate_updates = false;  // cross-check closed form vs least squares
};

struct LeakageReport {
  std::vector<double> trace;  // objective after every half-sweep
  double final_leakage = 0.0;
  int iterations = 0;  // full U+V sweeps executed
  bool converged = false;
  bool pinv_fallback = false;  // some free-space normal matrix was singular
  double max_update_deviation = 0.0;  // closed form vs least squares
};

namespace detail {

// Rotates every column so its largest entry is real positive; eigenvector
// phases are otherwise arbitrary and would leak LAPACK internals into
// results.
inline void fix_phases(arma::cx_mat& m) {
  for (arma::uword c = 0; c < m.n_cols; ++c) {
    const arma::uword idx = arma::abs(m.col(c)).index_max();
    const std::complex<double> z = m(idx, c);
    const double a = std::abs(z);
    if (a > 0.0) m.col(c) *= std::conj(z) / a;
  }
}

// Orthonormal basis of the d least-interfered directions of a Hermitian
// interference covariance. A zero covariance yields canonical directions.
inline arma::cx_mat smallest_eigvecs(const arma::cx_mat& cov, int d) {
  if (arma::norm(cov, "fro") == 0.0) {
    return arma::eye<arma::cx_mat>(cov.n_rows, static_cast<arma::uword>(d));
  }
  arma::vec eigval;
  arma::cx_mat eigvec;
  const arma::cx_mat sym = 0.5 * (cov + cov.t());
  if (!arma::eig_sym(eigval, eigvec, sym)) {
    throw std::runtime_error("smallest_eigvecs: eigendecomposition failed");
  }
  arma::cx_mat out = eigvec.head_cols(static_cast<arma::uword>(d));
  fix_phases(out);
  return out;
}

}  // namespace detail

// Alternating inter-cell leakage suppression on the structured transceivers
// of a subspace plan. The objective is the per-stream-power-weighted sum of
// interference powers across all connected inter-cell links; both half
// steps minimize it exactly, so the reported trace never increases.
inline std::pair<TransceiverSet, LeakageReport> suppress_inter_cell(
    const ChannelSet& ch, const StreamAssignment& d, const SubspacePlan& plan,
    const SuppressOptions& opts = {}) {
  const ConnectivitySpec& spec = ch.spec;
  const NetworkConfig& cfg = spec.cfg;
  validate(d, cfg);
  const int ms_count = cfg.links();

  // Per-stream weights: transmit power splits evenly over a cell's streams.
  std::vector<double> cell_weight(static_cast<size_t>(cfg.num_bs), 1.0);
  for (int n = 0; n < cfg.num_bs; ++n) {
    const int total = d.cell_total(n);
    if (total > 0) cell_weight[static_cast<size_t>(n)] = 1.0 / total;
  }

  TransceiverSet t;
  t.d = d;
  t.v_int.resize(static_cast<size_t>(ms_count));
  t.v.resize(static_cast<size_t>(ms_count));
  t.u.resize(static_cast<size_t>(ms_count));
  std::vector<arma::cx_mat> v_free(static_cast<size_t>(ms_count));

  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      const int id = cfg.ms_index(g, k);
      const int dk = d.streams(g, k);
      const MsPlan& mp = plan.at(g, k);
      const arma::uword nt = static_cast<arma::uword>(cfg.nt(g));
      const arma::uword nr = static_cast<arma::uword>(cfg.nr(g, k));
      if (dk == 0) {
        t.v_int[static_cast<size_t>(id)].set_size(nt, 0);
        t.u[static_cast<size_t>(id)].set_size(nr, 0);
        continue;
      }
      if (static_cast<int>(mp.core.dim()) != dk) {
        throw std::invalid_argument(
            "suppress_inter_cell: core dimension disagrees with streams");
      }
      Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(id)));
      v_free[static_cast<size_t>(id)] =
          mp.free_tx.dim() > 0
              ? rng.cgaussian_matrix(mp.free_tx.dim(),
                                     static_cast<arma::uword>(dk))
              : arma::cx_mat(0, static_cast<arma::uword>(dk),
                             arma::fill::none);
      t.v_int[static_cast<size_t>(id)] =
          mp.core.basis +
          (mp.free_tx.dim() > 0
               ? arma::cx_mat(mp.free_tx.basis * v_free[static_cast<size_t>(id)])
               : arma::cx_mat(nt, static_cast<arma::uword>(dk),
                              arma::fill::zeros));
      // Receive filters start as the least-interfered part of the receive
      // space; the first sweep recomputes them anyway.
      t.u[static_cast<size_t>(id)] =
          mp.receive.basis.head_cols(static_cast<arma::uword>(dk));
    }
  }

  const auto leakage = [&]() {
    double j = 0.0;
    for (int g = 0; g < cfg.num_bs; ++g) {
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        const int u_id = cfg.ms_index(g, k);
        if (d.streams(g, k) == 0) continue;
        for (int n = 0; n < cfg.num_bs; ++n) {
          if (n == g || !spec.connected(g, k, n)) continue;
          const arma::cx_mat& h = ch.channel(g, k, n);
          for (int jj = 0; jj < cfg.ms_per_bs; ++jj) {
            const int w_id = cfg.ms_index(n, jj);
            if (d.streams(n, jj) == 0) continue;
            const double p = arma::accu(arma::square(arma::abs(
                t.u[static_cast<size_t>(u_id)].t() * h *
                t.v_int[static_cast<size_t>(w_id)])));
            j += cell_weight[static_cast<size_t>(n)] * p;
          }
        }
      }
    }
    return j;
  };

  LeakageReport report;
  double prev = leakage();
  report.trace.push_back(prev);
  for (int it = 0; it < opts.max_iters; ++it) {
    // Receive half-sweep.
    for (int g = 0; g < cfg.num_bs; ++g) {
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        const int id = cfg.ms_index(g, k);
        const int dk = d.streams(g, k);
        if (dk == 0) continue;
        const arma::cx_mat& sr = plan.at(g, k).receive.basis;
        arma::cx_mat cov(sr.n_cols, sr.n_cols, arma::fill::zeros);
        for (int n = 0; n < cfg.num_bs; ++n) {
          if (n == g || !spec.connected(g, k, n)) continue;
          const arma::cx_mat& h = ch.channel(g, k, n);
          for (int jj = 0; jj < cfg.ms_per_bs; ++jj) {
            const int w_id = cfg.ms_index(n, jj);
            if (d.streams(n, jj) == 0) continue;
            const arma::cx_mat m =
                sr.t() * h * t.v_int[static_cast<size_t>(w_id)];
            cov += cell_weight[static_cast<size_t>(n)] * (m * m.t());
          }
        }
        t.u[static_cast<size_t>(id)] =
            sr * detail::smallest_eigvecs(cov, dk);
      }
    }
    report.trace.push_back(leakage());
    // Transmit half-sweep.
    for (int n = 0; n < cfg.num_bs; ++n) {
      for (int jj = 0; jj < cfg.ms_per_bs; ++jj) {
        const int id = cfg.ms_index(n, jj);
        const int dk = d.streams(n, jj);
        if (dk == 0) continue;
        const MsPlan& mp = plan.at(n, jj);
        if (mp.free_tx.dim() == 0) continue;  // nothing to optimize
        const arma::uword nt = static_cast<arma::uword>(cfg.nt(n));
        arma::cx_mat q(nt, nt, arma::fill::zeros);
        for (int g = 0; g < cfg.num_bs; ++g) {
          if (g == n) continue;
          for (int k = 0; k < cfg.ms_per_bs; ++k) {
            if (d.streams(g, k) == 0 || !spec.connected(g, k, n)) continue;
            const arma::cx_mat a =
                t.u[static_cast<size_t>(cfg.ms_index(g, k))].t() *
                ch.channel(g, k, n);
            q += a.t() * a;
          }
        }
        const arma::cx_mat& s = mp.free_tx.basis;
        const arma::cx_mat& core = mp.core.basis;
        arma::cx_mat vf;
        if (arma::norm(q, "fro") == 0.0) {
          vf.zeros(s.n_cols, static_cast<arma::uword>(dk));
        } else {
          const arma::cx_mat m = s.t() * q * s;
          const arma::cx_mat rhs = -(s.t() * (q * core));
          if (arma::rcond(m) < 1e-10) {
            report.pinv_fallback = true;
            vf = arma::pinv(m) * rhs;
          } else {
            vf = arma::solve(m, rhs, arma::solve_opts::likely_sympd);
          }
          if (opts.validate_updates) {
            // Oracle: the same minimization as an explicit least-squares
            // problem in the square root of the interference covariance.
            arma::vec eigval;
            arma::cx_mat eigvec;
            arma::eig_sym(eigval, eigvec, arma::cx_mat(0.5 * (q + q.t())));
            const arma::cx_mat root =
                eigvec * arma::diagmat(arma::sqrt(arma::clamp(
                             eigval, 0.0, eigval.max()))) *
                eigvec.t();
            // The root is rank deficient once interference is nearly
            // aligned, so ask for the least-squares solution up front.
            const arma::cx_mat ls = arma::solve(
                root * s, -(root * core), arma::solve_opts::force_approx);
            const auto objective = [&](const arma::cx_mat& x) {
              const arma::cx_mat vi = core + s * x;
              return std::abs(arma::trace(vi.t() * q * vi));
            };
            const double got = objective(vf);
            const double ref = objective(ls);
            const double dev = (got - ref) / std::max(1.0, ref);
            if (dev > report.max_update_deviation) {
              report.max_update_deviation = dev;
            }
          }
        }
        v_free[static_cast<size_t>(id)] = vf;
        t.v_int[static_cast<size_t>(id)] = core + s * vf;
      }
    }
    const double cur = leakage();
    report.trace.push_back(cur);
    ++report.iterations;
    if (cur < opts.abs_floor || prev - cur <= opts.rel_tol * prev) {
      report.converged = true;
      prev = cur;
      break;
    }
    prev = cur;
  }
  report.final_leakage = prev;
  t.v = t.v_int;  // callers without zero forcing use the aligned precoders
  return {std::move(t), std::move(report)};
}

// Intra-cell zero forcing. Per cell, the aggregate effective channel (all
// own receive filters applied to the direct links, observed through the
// aggregate intermediate precoder) is triangularized once per MS with that
// MS's rows last; the trailing columns of the resulting rotation then span
// directions invisible to every other MS of the cell. An SVD orthonormalizes
// the final per-MS precoder. Sets zf_rank_ok to false when an aggregate
// effective channel is rank deficient (alignment left too little room).
inline void zero_force_intra_cell(const ChannelSet& ch, TransceiverSet& t) {
  const ConnectivitySpec& spec = ch.spec;
  const NetworkConfig& cfg = spec.cfg;
  t.v = t.v_int;
  t.zf_rank_ok = true;
  for (int n = 0; n < cfg.num_bs; ++n) {
    const int total = t.d.cell_total(n);
    if (total == 0) continue;
    arma::cx_mat vagg(static_cast<arma::uword>(cfg.nt(n)), 0,
                      arma::fill::none);
    std::vector<arma::cx_mat> w(static_cast<size_t>(cfg.ms_per_bs));
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      const int id = cfg.ms_index(n, j);
      if (t.d.streams(n, j) == 0) {
        w[static_cast<size_t>(j)].set_size(0,
                                           static_cast<arma::uword>(cfg.nt(n)));
        continue;
      }
      w[static_cast<size_t>(j)] =
          t.u[static_cast<size_t>(id)].t() * ch.channel(n, j, n);
      vagg = arma::join_rows(vagg, t.v_int[static_cast<size_t>(id)]);
    }
    arma::cx_mat stacked(0, static_cast<arma::uword>(cfg.nt(n)),
                         arma::fill::none);
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      stacked = arma::join_cols(stacked, w[static_cast<size_t>(j)]);
    }
    const arma::cx_mat m_all = stacked * vagg;
    arma::vec sv;
    if (!arma::svd(sv, m_all) || sv.n_elem == 0 ||
        sv.min() <= kRankTol * sv.max()) {
      t.zf_rank_ok = false;
    }
    for (int q = 0; q < cfg.ms_per_bs; ++q) {
      const int dq = t.d.streams(n, q);
      if (dq == 0) continue;
      arma::cx_mat ordered(0, static_cast<arma::uword>(cfg.nt(n)),
                           arma::fill::none);
      for (int j = 0; j < cfg.ms_per_bs; ++j) {
        if (j == q) continue;
        ordered = arma::join_cols(ordered, w[static_cast<size_t>(j)]);
      }
      ordered = arma::join_cols(ordered, w[static_cast<size_t>(q)]);
      const arma::cx_mat m = ordered * vagg;
      arma::cx_mat qr_q, qr_r;
      if (!arma::qr(qr_q, qr_r, arma::cx_mat(m.t()))) {
        throw std::runtime_error("zero_force_intra_cell: QR failed");
      }
      const arma::cx_mat pick =
          qr_q.tail_cols(static_cast<arma::uword>(dq));
      const arma::cx_mat vq = vagg * pick;
      arma::cx_mat svd_u;
      arma::vec svd_s;
      arma::cx_mat svd_v;
      if (!arma::svd_econ(svd_u, svd_s, svd_v, vq)) {
        throw std::runtime_error("zero_force_intra_cell: SVD failed");
      }
      arma::cx_mat vstar = svd_u.head_cols(static_cast<arma::uword>(dq));
      detail::fix_phases(vstar);
      t.v[static_cast<size_t>(cfg.ms_index(n, q))] = std::move(vstar);
    }
  }
}

// Unstructured alternating leakage minimization over full-space orthonormal
// precoders and filters, counting intra-cell interference in the objective.
// Every MS runs its requested number of streams; nothing checks whether
// that is feasible. Serves as the classic iterative baseline.
//
// Initialisation is the dominant singular pair of each direct link
// (matched filter), which keeps same-cell precoders well separated at the
// start. A random start frequently drives both precoders of a cell onto a
// common direction: that zeroes their intra-cell cross terms, so descent
// favours it, but the shared direction is also orthogonal to both filters
// and the cell goes dark. The design is deterministic given the channels;
// opts.seed is unused here.
inline std::pair<TransceiverSet, LeakageReport> naive_iteration(
    const ChannelSet& ch, const SuppressOptions& opts = {}) {
  const ConnectivitySpec& spec = ch.spec;
  const NetworkConfig& cfg = spec.cfg;
  const int ms_count = cfg.links();

  TransceiverSet t;
  t.d.d.set_size(static_cast<arma::uword>(cfg.num_bs),
                 static_cast<arma::uword>(cfg.ms_per_bs));
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      t.d.d(static_cast<arma::uword>(g), static_cast<arma::uword>(k)) =
          cfg.dmax(g, k);
    }
  }
  std::vector<double> cell_weight(static_cast<size_t>(cfg.num_bs), 1.0);
  for (int n = 0; n < cfg.num_bs; ++n) {
    const int total = t.d.cell_total(n);
    if (total > 0) cell_weight[static_cast<size_t>(n)] = 1.0 / total;
  }
  t.v.resize(static_cast<size_t>(ms_count));
  t.u.resize(static_cast<size_t>(ms_count));
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      const int id = cfg.ms_index(g, k);
      const arma::uword dk = static_cast<arma::uword>(t.d.streams(g, k));
      arma::cx_mat su, sv;
      arma::vec ss;
      if (!arma::svd(su, ss, sv, ch.channel(g, k, g))) {
        throw std::runtime_error("naive_iteration: SVD failed");
      }
      t.v[static_cast<size_t>(id)] = sv.head_cols(dk);
      t.u[static_cast<size_t>(id)] = su.head_cols(dk);
    }
  }

  const auto leakage = [&]() {
    double j = 0.0;
    for (int g = 0; g < cfg.num_bs; ++g) {
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        const int u_id = cfg.ms_index(g, k);
        for (int n = 0; n < cfg.num_bs; ++n) {
          if (!spec.connected(g, k, n)) continue;
          const arma::cx_mat& h = ch.channel(g, k, n);
          for (int jj = 0; jj < cfg.ms_per_bs; ++jj) {
            const int w_id = cfg.ms_index(n, jj);
            if (w_id == u_id) continue;
            const double p = arma::accu(arma::square(arma::abs(
                t.u[static_cast<size_t>(u_id)].t() * h *
                t.v[static_cast<size_t>(w_id)])));
            j += cell_weight[static_cast<size_t>(n)] * p;
          }
        }
      }
    }
    return j;
  };

  LeakageReport report;
  double prev = leakage();
  report.trace.push_back(prev);
  for (int it = 0; it < opts.max_iters; ++it) {
    for (int g = 0; g < cfg.num_bs; ++g) {
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        const int id = cfg.ms_index(g, k);
        const int dk = t.d.streams(g, k);
        const arma::uword nr = static_cast<arma::uword>(cfg.nr(g, k));
        arma::cx_mat cov(nr, nr, arma::fill::zeros);
        for (int n = 0; n < cfg.num_bs; ++n) {
          if (!spec.connected(g, k, n)) continue;
          const arma::cx_mat& h = ch.channel(g, k, n);
          for (int jj = 0; jj < cfg.ms_per_bs; ++jj) {
            const int w_id = cfg.ms_index(n, jj);
            if (w_id == id) continue;
            const arma::cx_mat m = h * t.v[static_cast<size_t>(w_id)];
            cov += cell_weight[static_cast<size_t>(n)] * (m * m.t());
          }
        }
        t.u[static_cast<size_t>(id)] = detail::smallest_eigvecs(cov, dk);
      }
    }
    report.trace.push_back(leakage());
    for (int n = 0; n < cfg.num_bs; ++n) {
      for (int jj = 0; jj < cfg.ms_per_bs; ++jj) {
        const int id = cfg.ms_index(n, jj);
        const int dk = t.d.streams(n, jj);
        const arma::uword nt = static_cast<arma::uword>(cfg.nt(n));
        arma::cx_mat cov(nt, nt, arma::fill::zeros);
        for (int g = 0; g < cfg.num_bs; ++g) {
          for (int k = 0; k < cfg.ms_per_bs; ++k) {
            const int u_id = cfg.ms_index(g, k);
            if (u_id == id || !spec.connected(g, k, n)) continue;
            const arma::cx_mat m =
                ch.channel(g, k, n).t() * t.u[static_cast<size_t>(u_id)];
            cov += cell_weight[static_cast<size_t>(n)] * (m * m.t());
          }
        }
        t.v[static_cast<size_t>(id)] = detail::smallest_eigvecs(cov, dk);
      }
    }
    const double cur = leakage();
    report.trace.push_back(cur);
    ++report.iterations;
    if (cur < opts.abs_floor || prev - cur <= opts.rel_tol * prev) {
      report.converged = true;
      prev = cur;
      break;
    }
    prev = cur;
  }
  report.final_leakage = prev;
  t.v_int = t.v;
  return {std::move(t), std::move(report)};
}

}  // namespace iacell
