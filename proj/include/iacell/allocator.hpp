// SPDX-License-Identifier: Apache-2.0
//
// Stage-1 allocation. For fully connected networks, a greedy descent over
// stream counts guarded by the counting-feasibility oracle. For partially
// connected networks, stream counts and the per-MS transmit core, transmit
// free and receive subspaces are designed jointly: directions that lie in
// the transmit null spaces of many interfered receivers are preferred,
// because every such direction removes alignment constraints for free.

#pragma once

#include <armadillo>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iacell/feasibility.hpp"
#include "iacell/network.hpp"
#include "iacell/plan.hpp"
#include "iacell/subspace.hpp"

namespace iacell {

// Score for removing one stream from MS (g, k) under full connectivity:
// twice the streams everybody else runs (the constraints this removal
// cancels) minus the antenna budget this MS would free. Larger is better.
inline long long removal_score_full(const NetworkConfig& cfg,
                                    const StreamAssignment& d, int g, int k) {
  long long others = 0;
  for (int n = 0; n < cfg.num_bs; ++n) {
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      if (n == g && j == k) continue;
      others += d.streams(n, j);
    }
  }
  return 2 * others -
         (cfg.nt(g) + cfg.nr(g, k) - 4LL * d.streams(g, k) + 2);
}

// Greedy stream assignment for fully connected networks: start from the
// requested stream counts and remove one stream at a time from the
// highest-scoring MS until the counting oracle accepts the assignment.
// The optional removal log records every decremented (g, k) in order.
inline StreamAssignment assign_greedy_full(
    const NetworkConfig& cfg,
    std::vector<std::pair<int, int>>* removals = nullptr) {
  validate(cfg);
  StreamAssignment a;
  a.d.set_size(static_cast<arma::uword>(cfg.num_bs),
               static_cast<arma::uword>(cfg.ms_per_bs));
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      a.d(static_cast<arma::uword>(g), static_cast<arma::uword>(k)) =
          cfg.dmax(g, k);
    }
  }
  for (;;) {
    // A cell asking for more streams than transmit antennas has negative
    // freedom counts; skip the oracle, such a point is never feasible.
    bool overloaded = false;
    for (int g = 0; g < cfg.num_bs; ++g) {
      if (a.cell_total(g) > cfg.nt(g)) overloaded = true;
    }
    if (!overloaded && feasible_tree(build_instance_full(a, cfg)).feasible) {
      return a;
    }
    int bg = -1;
    int bk = -1;
    long long best = std::numeric_limits<long long>::lowest();
    for (int g = 0; g < cfg.num_bs; ++g) {
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        if (a.streams(g, k) == 0) continue;
        const long long s = removal_score_full(cfg, a, g, k);
        if (s > best) {
          best = s;
          bg = g;
          bk = k;
        }
      }
    }
    if (bg < 0) return a;  // everything at zero is trivially feasible
    --a.d(static_cast<arma::uword>(bg), static_cast<arma::uword>(bk));
    if (removals) removals->emplace_back(bg, bk);
  }
}

// Map from a sorted set of out-of-cell MS ids (flattened g*K + k) to the
// intersection of their transmit null spaces toward one BS.
using NullSpaceMap = std::map<std::vector<int>, Subspace>;

// Builds the intersection lattice bottom-up by cardinality. A subset is
// extended only while all of its sub-subsets have nonzero intersections, so
// the enumeration stops as soon as intersections collapse to {0}. Singleton
// entries are always present; disconnected links enter as the full space
// (the identity of intersection), so any subset containing them resolves to
// the entry without them and larger subsets are not materialized for them.
inline NullSpaceMap common_null_spaces(const ConnectivitySpec& spec, int n,
                                       std::size_t max_entries = 1u << 16) {
  const NetworkConfig& cfg = spec.cfg;
  if (n < 0 || n >= cfg.num_bs) {
    throw std::invalid_argument("common_null_spaces: BS index out of range");
  }
  const arma::uword nt = static_cast<arma::uword>(cfg.nt(n));
  NullSpaceMap out;
  out.emplace(std::vector<int>{}, full_subspace(nt));
  std::vector<int> connected_ids;
  for (int g = 0; g < cfg.num_bs; ++g) {
    if (g == n) continue;
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      const int id = cfg.ms_index(g, k);
      if (spec.connected(g, k, n)) {
        connected_ids.push_back(id);
        out.emplace(std::vector<int>{id}, spec.link(g, k, n).tx_null);
      } else {
        out.emplace(std::vector<int>{id}, full_subspace(nt));
      }
    }
  }
  std::vector<std::vector<int>> frontier;
  for (int id : connected_ids) {
    if (out.at({id}).dim() > 0) frontier.push_back({id});
  }
  while (!frontier.empty()) {
    std::vector<std::vector<int>> next;
    for (const auto& base : frontier) {
      for (int id : connected_ids) {
        if (id <= base.back()) continue;
        std::vector<int> key = base;
        key.push_back(id);
        // Every sub-subset one element smaller must be nonzero; dropping
        // the new id gives `base`, which is nonzero by construction.
        bool extendable = true;
        for (std::size_t drop = 0; extendable && drop + 1 < key.size();
             ++drop) {
          std::vector<int> sub = key;
          sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
          const auto it = out.find(sub);
          extendable = it != out.end() && it->second.dim() > 0;
        }
        if (!extendable) continue;
        if (out.size() >= max_entries) {
          throw std::runtime_error(
              "common_null_spaces: lattice exceeds the entry budget");
        }
        Subspace meet = intersect(out.at(base), out.at({id}));
        const bool nonzero = meet.dim() > 0;
        auto inserted = out.emplace(std::move(key), std::move(meet));
        if (nonzero) next.push_back(inserted.first->first);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

// A candidate pool for subspace design: directions inside `space` cancel
// `weight` alignment constraints.
struct NullCandidate {
  Subspace space;
  long long weight = 0;
};

namespace detail {

// Closure of the base spaces under pairwise intersection, zeros dropped.
// Every distinct nonzero intersection of any subset of bases appears here,
// so ranking members by containment weight is equivalent to ranking all
// subset intersections without enumerating subsets.
inline std::vector<Subspace> intersection_closure(
    const std::vector<Subspace>& bases, arma::uword ambient,
    std::size_t max_members = 4096) {
  std::vector<Subspace> closure;
  closure.push_back(full_subspace(ambient));
  auto known = [&closure](const Subspace& q) {
    for (const Subspace& m : closure) {
      if (m.dim() == q.dim() && subspace_equal(m, q)) return true;
    }
    return false;
  };
  std::size_t head = 0;
  while (head < closure.size()) {
    const Subspace current = closure[head++];  // copy: vector may grow
    for (const Subspace& b : bases) {
      if (b.dim() == 0) continue;
      Subspace meet = intersect(current, b);
      if (meet.dim() == 0 || known(meet)) continue;
      if (closure.size() >= max_members) {
        throw std::runtime_error(
            "intersection_closure: member budget exceeded");
      }
      closure.push_back(std::move(meet));
    }
  }
  return closure;
}

// Ranks candidate spaces by weight (ties: larger dimension, then insertion
// order) and drops members no constraint cares about.
inline std::vector<NullCandidate> rank_candidates(
    std::vector<Subspace> members,
    const std::vector<std::pair<const Subspace*, long long>>& terms) {
  std::vector<NullCandidate> cands;
  for (Subspace& m : members) {
    if (m.dim() == 0) continue;
    long long w = 0;
    for (const auto& [null_space, cap] : terms) {
      if (null_space->dim() >= m.dim() && contains(*null_space, m)) w += cap;
    }
    if (w > 0) cands.push_back({std::move(m), w});
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const NullCandidate& a, const NullCandidate& b) {
                     if (a.weight != b.weight) return a.weight > b.weight;
                     return a.space.dim() > b.space.dim();
                   });
  return cands;
}

// First basis direction of the highest-weight candidate that still meets
// the allowed space; falls back to the allowed space itself.
inline arma::cx_vec pick_direction(const std::vector<NullCandidate>& cands,
                                   const Subspace& allowed) {
  for (const NullCandidate& cand : cands) {
    const Subspace meet = intersect(cand.space, allowed);
    if (meet.dim() > 0) return meet.basis.col(0);
  }
  return allowed.basis.col(0);
}

}  // namespace detail

// Weighted candidate spaces for transmit-side design at BS n: weight of a
// candidate counts min(d, rank) over every interfered out-of-cell link
// whose transmit null space contains the candidate.
inline std::vector<NullCandidate> weighted_tx_candidates(
    const ConnectivitySpec& spec, const StreamAssignment& d, int n) {
  const NetworkConfig& cfg = spec.cfg;
  std::vector<Subspace> bases;
  std::vector<std::pair<const Subspace*, long long>> terms;
  for (int g = 0; g < cfg.num_bs; ++g) {
    if (g == n) continue;
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      if (!spec.connected(g, k, n)) continue;
      const long long cap = std::min<long long>(d.streams(g, k),
                                                spec.link_rank(g, k, n));
      if (cap <= 0) continue;
      const Subspace& null_space = spec.link(g, k, n).tx_null;
      bases.push_back(null_space);
      terms.emplace_back(&null_space, cap);
    }
  }
  return detail::rank_candidates(
      detail::intersection_closure(bases,
                                   static_cast<arma::uword>(cfg.nt(n))),
      terms);
}

// Receive-side mirror for MS (g, k): weight of a candidate counts, per
// interfering BS whose receive null space contains it, the constraints all
// streams of that BS would impose.
inline std::vector<NullCandidate> weighted_rx_candidates(
    const ConnectivitySpec& spec, const StreamAssignment& d, int g, int k) {
  const NetworkConfig& cfg = spec.cfg;
  std::vector<Subspace> bases;
  std::vector<std::pair<const Subspace*, long long>> terms;
  for (int n = 0; n < cfg.num_bs; ++n) {
    if (n == g || !spec.connected(g, k, n)) continue;
    const int rank = spec.link_rank(g, k, n);
    long long cap = 0;
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      cap += std::min(d.streams(n, j), rank);
    }
    if (cap <= 0) continue;
    const Subspace& null_space = spec.link(g, k, n).rx_null;
    bases.push_back(null_space);
    terms.emplace_back(&null_space, cap);
  }
  return detail::rank_candidates(
      detail::intersection_closure(bases,
                                   static_cast<arma::uword>(cfg.nr(g, k))),
      terms);
}

// Designs the per-MS transmit core spaces one dimension at a time, clipping
// stream counts when a cell runs out of usable direct-link dimensions. Each
// dimension comes from the highest-weight candidate that is orthogonal to
// all previously fixed cores and visible over the own direct link; when no
// weighted candidate fits, any remaining allowed direction is used.
inline SubspacePlan design_core_spaces(const ConnectivitySpec& spec,
                                       StreamAssignment& d) {
  const NetworkConfig& cfg = spec.cfg;
  SubspacePlan plan;
  plan.ms_per_bs = cfg.ms_per_bs;
  plan.ms.resize(static_cast<std::size_t>(cfg.links()));
  for (int n = 0; n < cfg.num_bs; ++n) {
    const arma::uword nt = static_cast<arma::uword>(cfg.nt(n));
    const auto cands = weighted_tx_candidates(spec, d, n);
    Subspace used = zero_subspace(nt);
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      MsPlan& m = plan.at(n, j);
      const Subspace blocked =
          subspace_sum(used, spec.link(n, j, n).tx_null);
      const int room = cfg.nt(n) - static_cast<int>(blocked.dim());
      const int dn = std::min(d.streams(n, j), std::max(0, room));
      d.d(static_cast<arma::uword>(n), static_cast<arma::uword>(j)) = dn;
      Subspace allowed = complement(blocked);
      arma::cx_mat core(nt, 0, arma::fill::none);
      for (int t = 0; t < dn; ++t) {
        const arma::cx_vec dir = detail::pick_direction(cands, allowed);
        core.insert_cols(core.n_cols, dir);
        allowed = intersect(allowed, complement(Subspace{arma::cx_mat(dir)}));
      }
      m.core = core.n_cols > 0 ? Subspace{core} : zero_subspace(nt);
      m.receive = zero_subspace(static_cast<arma::uword>(cfg.nr(n, j)));
      m.free_tx = zero_subspace(nt);
      used = subspace_sum(used, m.core);
    }
  }
  return plan;
}

// Completes a core-only plan: per BS one nested chain of transmit free
// directions is grown by the weighted priority rule inside the orthogonal
// complement of all cores, and every MS keeps the prefix maximizing its
// freedoms-minus-constraints score. Receive spaces are grown the same way
// inside the direct link's visible space, scored against the already fixed
// transmit spaces. Ties prefer the smaller dimension.
inline SubspacePlan design_free_spaces(const ConnectivitySpec& spec,
                                       const StreamAssignment& d,
                                       SubspacePlan plan) {
  const NetworkConfig& cfg = spec.cfg;
  for (int n = 0; n < cfg.num_bs; ++n) {
    const arma::uword nt = static_cast<arma::uword>(cfg.nt(n));
    Subspace all_cores = zero_subspace(nt);
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      all_cores = subspace_sum(all_cores, plan.at(n, j).core);
    }
    const int room = cfg.nt(n) - static_cast<int>(all_cores.dim());
    const auto cands = weighted_tx_candidates(spec, d, n);
    Subspace allowed = complement(all_cores);
    arma::cx_mat chain(nt, 0, arma::fill::none);
    for (int s = 0; s < room; ++s) {
      const arma::cx_vec dir = detail::pick_direction(cands, allowed);
      chain.insert_cols(chain.n_cols, dir);
      allowed = intersect(allowed, complement(Subspace{arma::cx_mat(dir)}));
    }
    // Penalty terms: per interfered out-of-cell link, how many constraints
    // each visible own dimension costs.
    std::vector<std::pair<long long, Subspace>> terms;
    for (int g = 0; g < cfg.num_bs; ++g) {
      if (g == n) continue;
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        if (!spec.connected(g, k, n)) continue;
        const long long cap = std::min<long long>(d.streams(g, k),
                                                  spec.link_rank(g, k, n));
        if (cap <= 0) continue;
        terms.emplace_back(cap, complement(spec.link(g, k, n).tx_null));
      }
    }
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      MsPlan& m = plan.at(n, j);
      const int dn = d.streams(n, j);
      if (dn == 0) {
        m.free_tx = zero_subspace(nt);
        continue;
      }
      long long best = std::numeric_limits<long long>::lowest();
      int best_s = 0;
      for (int s = 0; s <= room; ++s) {
        const Subspace vs =
            s > 0 ? subspace_sum(m.core, Subspace{chain.head_cols(
                                     static_cast<arma::uword>(s)).eval()})
                  : m.core;
        long long penalty = 0;
        for (const auto& [cap, visible] : terms) {
          penalty += cap * std::min<long long>(
                               dn, intersect(vs, visible).dim());
        }
        const long long score = static_cast<long long>(dn) * s - penalty;
        if (score > best) {
          best = score;
          best_s = s;
        }
      }
      m.free_tx = best_s > 0
                      ? Subspace{chain.head_cols(
                            static_cast<arma::uword>(best_s)).eval()}
                      : zero_subspace(nt);
    }
  }
  // Receive side: scored against the final transmit spaces.
  std::vector<Subspace> joint(static_cast<std::size_t>(cfg.links()));
  for (int n = 0; n < cfg.num_bs; ++n) {
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      const MsPlan& mw = plan.at(n, j);
      joint[static_cast<std::size_t>(cfg.ms_index(n, j))] =
          subspace_sum(mw.core, mw.free_tx);
    }
  }
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      MsPlan& m = plan.at(g, k);
      const arma::uword nr = static_cast<arma::uword>(cfg.nr(g, k));
      const int du = d.streams(g, k);
      if (du == 0) {
        m.receive = zero_subspace(nr);
        continue;
      }
      const Subspace direct_visible =
          complement(spec.link(g, k, g).rx_null);
      const int cap_dim = static_cast<int>(direct_visible.dim());
      if (cap_dim < du) {
        throw std::invalid_argument(
            "design_free_spaces: direct link cannot carry the streams");
      }
      const auto cands = weighted_rx_candidates(spec, d, g, k);
      Subspace allowed = direct_visible;
      arma::cx_mat chain(nr, 0, arma::fill::none);
      for (int s = 0; s < cap_dim; ++s) {
        const arma::cx_vec dir = detail::pick_direction(cands, allowed);
        chain.insert_cols(chain.n_cols, dir);
        allowed = intersect(allowed, complement(Subspace{arma::cx_mat(dir)}));
      }
      std::vector<std::pair<long long, Subspace>> terms;
      for (int n = 0; n < cfg.num_bs; ++n) {
        if (n == g || !spec.connected(g, k, n)) continue;
        const LinkSpec& l = spec.link(g, k, n);
        const Subspace tx_visible = complement(l.tx_null);
        long long tsum = 0;
        for (int j = 0; j < cfg.ms_per_bs; ++j) {
          tsum += std::min<long long>(
              d.streams(n, j),
              intersect(joint[static_cast<std::size_t>(cfg.ms_index(n, j))],
                        tx_visible)
                  .dim());
        }
        if (tsum <= 0) continue;
        terms.emplace_back(tsum, complement(l.rx_null));
      }
      long long best = std::numeric_limits<long long>::lowest();
      int best_e = 0;
      for (int e = 0; e + du <= cap_dim; ++e) {
        const Subspace sr{
            chain.head_cols(static_cast<arma::uword>(du + e)).eval()};
        long long penalty = 0;
        for (const auto& [tsum, visible] : terms) {
          penalty += tsum * std::min<long long>(
                                du, intersect(sr, visible).dim());
        }
        const long long score = static_cast<long long>(du) * e - penalty;
        if (score > best) {
          best = score;
          best_e = e;
        }
      }
      m.receive = Subspace{
          chain.head_cols(static_cast<arma::uword>(du + best_e)).eval()};
    }
  }
  return plan;
}

// Joint result of the partial-connectivity allocator.
struct PartialAssignment {
  StreamAssignment d;
  SubspacePlan plan;
};

// Greedy joint stream assignment and subspace design for partially
// connected networks. Starts from the per-MS direct-link rank, designs the
// subspaces for the current counts, and while the counting oracle rejects
// the design removes the stream whose removal cancels the most constraints
// net of the freedoms it gives up (one extra free dimension on each side is
// credited back, since the removed stream vacates one core and one receive
// dimension).
inline PartialAssignment assign_greedy_partial(
    const ConnectivitySpec& spec,
    std::vector<std::pair<int, int>>* removals = nullptr) {
  const NetworkConfig& cfg = spec.cfg;
  validate(cfg);
  StreamAssignment d;
  d.d.set_size(static_cast<arma::uword>(cfg.num_bs),
               static_cast<arma::uword>(cfg.ms_per_bs));
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      d.d(static_cast<arma::uword>(g), static_cast<arma::uword>(k)) =
          std::min(cfg.dmax(g, k), spec.link_rank(g, k, g));
    }
  }
  for (;;) {
    StreamAssignment cur = d;
    SubspacePlan plan = design_core_spaces(spec, cur);
    plan = design_free_spaces(spec, cur, std::move(plan));
    if (feasible_tree(build_instance_partial(cur, plan, spec)).feasible) {
      return {cur, plan};
    }
    d = cur;  // keep the clips applied during core design
    const detail::PartialFactors f = detail::partial_factors(plan, spec);
    int bg = -1;
    int bk = -1;
    long long best = std::numeric_limits<long long>::lowest();
    for (int g = 0; g < cfg.num_bs; ++g) {
      for (int k = 0; k < cfg.ms_per_bs; ++k) {
        const int du = d.streams(g, k);
        if (du == 0) continue;
        const int u = cfg.ms_index(g, k);
        long long gain = 0;
        for (int m = 0; m < cfg.num_bs; ++m) {
          if (m == g) continue;
          for (int j = 0; j < cfg.ms_per_bs; ++j) {
            const int w = cfg.ms_index(m, j);
            const long long dw = d.streams(m, j);
            if (du <= f.r(u, m)) gain += std::min(dw, (long long)f.t(w, u));
            if (du <= f.t(u, w)) gain += std::min(dw, (long long)f.r(w, g));
          }
        }
        const MsPlan& mp = plan.at(g, k);
        const long long st = static_cast<long long>(mp.free_tx.dim());
        const long long sr =
            static_cast<long long>(mp.receive.dim()) - du;
        const long long score = gain - (st - du + 1) - (sr - du + 1);
        if (score > best) {
          best = score;
          bg = g;
          bk = k;
        }
      }
    }
    if (bg < 0) return {d, std::move(plan)};  // all zero; never rejected
    --d.d(static_cast<arma::uword>(bg), static_cast<arma::uword>(bk));
    if (removals) removals->emplace_back(bg, bk);
  }
}

}  // namespace iacell
