// SPDX-License-Identifier: Apache-2.0
//
// Rate and degrees-of-freedom evaluation plus reference schemes. The rate
// model treats interference as noise with uniform per-stream power at every
// base station and unit noise variance; dof_slope turns two high-SNR rate
// samples into a stream-count estimate. dof_bound solves the symmetric
// per-user stream program exactly, and baseline_bl1/bl4/bl5 build the
// reference transceivers the experiments compare against.

#pragma once

#include <armadillo>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iacell/allocator.hpp"
#include "iacell/network.hpp"
#include "iacell/plan.hpp"
#include "iacell/rng.hpp"
#include "iacell/subspace.hpp"
#include "iacell/transceiver.hpp"

namespace iacell {

// Rotates every direct-link effective channel U^H H V to a diagonal via its
// SVD. The rotations stay inside the spans of U and V, so alignment and
// zero-forcing properties are untouched, but per-stream SINR accounting no
// longer sees cross-talk between a user's own streams. Apply to every
// scheme before computing rates so they are measured on equal footing.
inline void diagonalize_direct_links(const ChannelSet& ch, TransceiverSet& t) {
  const NetworkConfig& cfg = ch.spec.cfg;
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      if (t.d.streams(g, k) == 0) continue;
      const size_t id = static_cast<size_t>(cfg.ms_index(g, k));
      const arma::cx_mat e = t.u[id].t() * ch.channel(g, k, g) * t.v[id];
      arma::cx_mat a, b;
      arma::vec s;
      if (!arma::svd(a, s, b, e)) {
        throw std::runtime_error("diagonalize_direct_links: SVD failed");
      }
      t.u[id] = t.u[id] * a;
      t.v[id] = t.v[id] * b;
    }
  }
}

struct ThroughputSample {
  double snr_db = 0.0;
  double sum_rate_bits = 0.0;
  // SINR per stream, users in (cell, user) order, streams ascending.
  std::vector<double> per_stream_sinr;
  // Unit-power inter-cell interference energy through the final
  // transceivers; near zero exactly when the network is aligned.
  double residual_leakage = 0.0;
};

namespace detail {

// Shared rate loop. When `round_robin` is set, cells transmit in disjoint
// time slots: only own-cell interference counts and each rate term carries
// a 1/G duty factor. Inter-cell terms then still accumulate into
// residual_leakage so the sample remains informative.
inline ThroughputSample throughput_impl(const ChannelSet& ch,
                                        const TransceiverSet& t, double power,
                                        bool round_robin) {
  if (!(power > 0.0)) {
    throw std::invalid_argument("sum_throughput: power must be positive");
  }
  const NetworkConfig& cfg = ch.spec.cfg;
  const int G = cfg.num_bs;
  const int K = cfg.ms_per_bs;
  std::vector<double> stream_power(static_cast<size_t>(G), 0.0);
  for (int n = 0; n < G; ++n) {
    const int total = t.d.cell_total(n);
    if (total > 0) stream_power[static_cast<size_t>(n)] = power / total;
  }

  ThroughputSample out;
  out.snr_db = 10.0 * std::log10(power);
  const double duty = round_robin ? 1.0 / static_cast<double>(G) : 1.0;
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      const int dk = t.d.streams(g, k);
      if (dk == 0) continue;
      const size_t rx = static_cast<size_t>(cfg.ms_index(g, k));
      std::vector<double> signal(static_cast<size_t>(dk), 0.0);
      std::vector<double> interference(static_cast<size_t>(dk), 0.0);
      for (int n = 0; n < G; ++n) {
        if (t.d.cell_total(n) == 0) continue;
        const arma::cx_mat m = t.u[rx].t() * ch.channel(g, k, n);
        for (int j = 0; j < K; ++j) {
          const int dn = t.d.streams(n, j);
          if (dn == 0) continue;
          const size_t tx = static_cast<size_t>(cfg.ms_index(n, j));
          const arma::mat p2 = arma::square(arma::abs(m * t.v[tx]));
          if (n != g) {
            out.residual_leakage += arma::accu(p2);
            if (round_robin) continue;  // other cells are silent in the slot
          }
          for (int s = 0; s < dk; ++s) {
            for (int sp = 0; sp < dn; ++sp) {
              const double val = stream_power[static_cast<size_t>(n)] *
                                 p2(static_cast<arma::uword>(s),
                                    static_cast<arma::uword>(sp));
              if (n == g && j == k && sp == s) {
                signal[static_cast<size_t>(s)] = val;
              } else {
                interference[static_cast<size_t>(s)] += val;
              }
            }
          }
        }
      }
      for (int s = 0; s < dk; ++s) {
        const double sinr = signal[static_cast<size_t>(s)] /
                            (1.0 + interference[static_cast<size_t>(s)]);
        out.per_stream_sinr.push_back(sinr);
        out.sum_rate_bits += duty * std::log2(1.0 + sinr);
      }
    }
  }
  return out;
}

}  // namespace detail

// Network sum rate with every cell transmitting simultaneously. Each cell
// splits its power budget evenly over its streams; noise has unit variance,
// so snr_db = 10 log10(power).
inline ThroughputSample sum_throughput(const ChannelSet& ch,
                                       const TransceiverSet& t, double power) {
  return detail::throughput_impl(ch, t, power, false);
}

// Sum rate under round-robin scheduling: each cell is active for a 1/G
// share of time at full power and sees no inter-cell interference.
inline ThroughputSample sum_throughput_round_robin(const ChannelSet& ch,
                                                   const TransceiverSet& t,
                                                   double power) {
  return detail::throughput_impl(ch, t, power, true);
}

// Rate slope between two SNR points in bits per 3 dB (i.e. per doubling of
// power); for an interference-free network this equals the stream count.
inline double dof_slope(const ThroughputSample& lo, const ThroughputSample& hi) {
  const double octaves = (hi.snr_db - lo.snr_db) / 10.0 * std::log2(10.0);
  return (hi.sum_rate_bits - lo.sum_rate_bits) / octaves;
}

// Symmetric-network query for the per-user stream bound: G cells of K users
// with Nt/Nr antennas, cross links reaching J cells each way, direct links
// of rank R1, cross links of rank R2, and d_f requested streams per user
// (0 = as many as the antennas allow).
struct DoFBoundQuery {
  int G = 0;
  int K = 0;
  int J = 0;
  int Nt = 0;
  int Nr = 0;
  int R1 = 0;
  int R2 = 0;
  int d_f = 0;
};

inline void validate(const DoFBoundQuery& q) {
  if (q.G < 1 || q.K < 1 || q.J < 1) {
    throw std::invalid_argument("DoFBoundQuery: G, K and J must be positive");
  }
  if (q.Nr < 1 || q.Nt < q.Nr) {
    throw std::invalid_argument("DoFBoundQuery: need Nt >= Nr >= 1");
  }
  if (q.R1 < 0 || q.R1 > q.Nr || q.R2 < 0 || q.R2 > q.Nr) {
    throw std::invalid_argument("DoFBoundQuery: ranks must lie in [0, Nr]");
  }
  if (q.d_f < 0 || q.d_f * q.K > q.Nt) {
    throw std::invalid_argument("DoFBoundQuery: need 0 <= d_f*K <= Nt");
  }
}

namespace detail {

// Largest admissible per-user stream count for the query.
inline int bound_cap(const DoFBoundQuery& q) {
  int cap = std::min(q.R1, q.Nt / q.K);
  if (q.d_f > 0) cap = std::min(cap, q.d_f);
  return cap;
}

// Constraint surplus of the symmetric program at shared-dimension size s,
// scaled by Nt to stay in integers: interfering streams that remain visible
// through the rank-R2 cross links, minus the transmit and receive freedoms
// d*s + d*(Nr - d) contribute per user (normalised by d). Feasible iff <= 0.
inline long long bound_surplus(const DoFBoundQuery& q, long long d,
                               long long s) {
  const long long reach = std::min<long long>(q.G - 1, 2LL * q.J) * q.K;
  const long long visible =
      std::min(d * q.Nt, static_cast<long long>(q.R2) * (d + s));
  return reach * visible - (s + q.Nr - d) * static_cast<long long>(q.Nt);
}

}  // namespace detail

// Exact per-user stream count supportable by a symmetric partially
// connected network. The surplus is concave in the shared dimension s, so
// its minimum over s in [0, Nt - d*K] sits at an endpoint; checking both
// endpoints decides each d exactly, which matters once K > 1 where the
// visible-stream term can saturate before s reaches its range limit.
inline int dof_bound(const DoFBoundQuery& q) {
  validate(q);
  for (int d = detail::bound_cap(q); d >= 1; --d) {
    const long long smax = static_cast<long long>(q.Nt) -
                           static_cast<long long>(d) * q.K;
    if (detail::bound_surplus(q, d, 0) <= 0 ||
        detail::bound_surplus(q, d, smax) <= 0) {
      return d;
    }
  }
  return 0;
}

// Reference enumeration of the same program over the full (d, s) grid;
// dof_bound must agree with this everywhere.
inline int dof_bound_enumerate(const DoFBoundQuery& q) {
  validate(q);
  for (int d = detail::bound_cap(q); d >= 1; --d) {
    const long long smax = static_cast<long long>(q.Nt) -
                           static_cast<long long>(d) * q.K;
    for (long long s = 0; s <= smax; ++s) {
      if (detail::bound_surplus(q, d, s) <= 0) return d;
    }
  }
  return 0;
}

// Reference scheme: the full-network pipeline run as-is on the actual
// (possibly partially connected) channels. Stream counts come from the
// full-connectivity counting rules and the precoder structure ignores the
// per-link null spaces, so none of the partial-connectivity slack is used.
inline std::pair<TransceiverSet, LeakageReport> baseline_bl1(
    const ChannelSet& ch, const SuppressOptions& opts = {}) {
  const NetworkConfig& cfg = ch.spec.cfg;
  const StreamAssignment d = assign_greedy_full(cfg);
  const SubspacePlan plan = make_full_structure_plan(cfg, d);
  auto designed = suppress_inter_cell(ch, d, plan, opts);
  zero_force_intra_cell(ch, designed.first);
  return designed;
}

// Reference scheme: round-robin scheduling with intra-cell zero forcing.
// Each receive filter keeps the strongest directions of its direct link and
// each precoder nulls the other users of the same cell inside the remaining
// space; evaluate with sum_throughput_round_robin so the 1/G duty factor
// applies. Stream counts are capped so each cell's total fits its antennas.
inline TransceiverSet baseline_bl4(const ChannelSet& ch) {
  const ConnectivitySpec& spec = ch.spec;
  const NetworkConfig& cfg = spec.cfg;
  const int G = cfg.num_bs;
  const int K = cfg.ms_per_bs;
  TransceiverSet t;
  t.d.d.zeros(static_cast<arma::uword>(G), static_cast<arma::uword>(K));
  t.v_int.resize(static_cast<size_t>(cfg.links()));
  t.v.resize(static_cast<size_t>(cfg.links()));
  t.u.resize(static_cast<size_t>(cfg.links()));
  for (int g = 0; g < G; ++g) {
    const arma::uword nt = static_cast<arma::uword>(cfg.nt(g));
    int used = 0;
    for (int k = 0; k < K; ++k) {
      const int dk = std::min(
          {cfg.dmax(g, k), spec.link_rank(g, k, g), cfg.nt(g) - used});
      t.d.d(static_cast<arma::uword>(g), static_cast<arma::uword>(k)) =
          std::max(0, dk);
      used += std::max(0, dk);
    }
    std::vector<arma::cx_mat> w(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
      const int dk = t.d.streams(g, k);
      const size_t id = static_cast<size_t>(cfg.ms_index(g, k));
      const arma::uword nr = static_cast<arma::uword>(cfg.nr(g, k));
      if (dk == 0) {
        t.u[id].set_size(nr, 0);
        t.v[id].set_size(nt, 0);
        t.v_int[id].set_size(nt, 0);
        continue;
      }
      arma::cx_mat lu, rv;
      arma::vec sv;
      if (!arma::svd_econ(lu, sv, rv, ch.channel(g, k, g))) {
        throw std::runtime_error("baseline_bl4: SVD failed");
      }
      t.u[id] = lu.head_cols(static_cast<arma::uword>(dk));
      detail::fix_phases(t.u[id]);
      w[static_cast<size_t>(k)] = t.u[id].t() * ch.channel(g, k, g);
    }
    for (int k = 0; k < K; ++k) {
      const int dk = t.d.streams(g, k);
      if (dk == 0) continue;
      const size_t id = static_cast<size_t>(cfg.ms_index(g, k));
      arma::cx_mat others(0, nt);
      for (int j = 0; j < K; ++j) {
        if (j != k && t.d.streams(g, j) > 0) {
          others = arma::join_cols(others, w[static_cast<size_t>(j)]);
        }
      }
      const Subspace room =
          others.n_rows > 0 ? null_space(others) : full_subspace(nt);
      arma::cx_mat lu, rv;
      arma::vec sv;
      if (!arma::svd(lu, sv, rv, arma::cx_mat(w[static_cast<size_t>(k)] *
                                              room.basis))) {
        throw std::runtime_error("baseline_bl4: SVD failed");
      }
      t.v[id] = room.basis * rv.head_cols(static_cast<arma::uword>(dk));
      detail::fix_phases(t.v[id]);
      t.v_int[id] = t.v[id];
    }
  }
  return t;
}

// Reference scheme: isotropic transmission. Every user gets its requested
// stream count with seeded random orthonormal precoders and receive
// filters; no coordination of any kind.
inline TransceiverSet baseline_bl5(const ChannelSet& ch, std::uint64_t seed) {
  const NetworkConfig& cfg = ch.spec.cfg;
  TransceiverSet t;
  t.d.d.set_size(static_cast<arma::uword>(cfg.num_bs),
                 static_cast<arma::uword>(cfg.ms_per_bs));
  t.v_int.resize(static_cast<size_t>(cfg.links()));
  t.v.resize(static_cast<size_t>(cfg.links()));
  t.u.resize(static_cast<size_t>(cfg.links()));
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      const int dk = cfg.dmax(g, k);
      t.d.d(static_cast<arma::uword>(g), static_cast<arma::uword>(k)) = dk;
      const size_t id = static_cast<size_t>(cfg.ms_index(g, k));
      const arma::uword nt = static_cast<arma::uword>(cfg.nt(g));
      const arma::uword nr = static_cast<arma::uword>(cfg.nr(g, k));
      if (dk == 0) {
        t.v[id].set_size(nt, 0);
        t.v_int[id].set_size(nt, 0);
        t.u[id].set_size(nr, 0);
        continue;
      }
      const std::uint64_t ms = static_cast<std::uint64_t>(id);
      Rng rng_v(mix_seed(seed, 2 * ms));
      Rng rng_u(mix_seed(seed, 2 * ms + 1));
      arma::cx_mat q, r;
      if (!arma::qr_econ(q, r,
                         rng_v.cgaussian_matrix(
                             nt, static_cast<arma::uword>(dk)))) {
        throw std::runtime_error("baseline_bl5: QR failed");
      }
      t.v[id] = q.head_cols(static_cast<arma::uword>(dk));
      if (!arma::qr_econ(q, r,
                         rng_u.cgaussian_matrix(
                             nr, static_cast<arma::uword>(dk)))) {
        throw std::runtime_error("baseline_bl5: QR failed");
      }
      t.u[id] = q.head_cols(static_cast<arma::uword>(dk));
      t.v_int[id] = t.v[id];
    }
  }
  return t;
}

}  // namespace iacell
