// SPDX-License-Identifier: Apache-2.0
//
// Network description and channel generation for a G-cell downlink with K
// mobile stations (MS) per base station (BS). Partial connectivity is
// captured per link by a path gain (zero means disconnected) together with
// a transmit-side and a receive-side null space: directions in the transmit
// null space are annihilated by the channel, and the channel's rows are
// confined to the orthogonal complement of the receive null space.
//
// A channel realisation is drawn as H = gain * A^H * Hw * B with Hw i.i.d.
// CN(0,1), where A (resp. B) is the orthogonal projector onto the
// complement of the receive (resp. transmit) null space, scaled to unit
// Frobenius norm.

#pragma once

#include <armadillo>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "iacell/rng.hpp"
#include "iacell/subspace.hpp"

namespace iacell {

inline constexpr int kMaxAntennas = 16;

struct FullyConnected {};

// Cyclic cell layout: BS n and the MSs of cell g are connected iff the
// cyclic distance between n and g is at most J. Connected links have
// low-rank transmit correlation described by blocks of R1 (intra-cell) or
// R2 (inter-cell) consecutive basis indices. basis_seed = 0 selects the
// canonical basis; any other value selects a seeded random unitary basis
// per BS.
struct SymmetricTopology {
  int J = 1;
  int R1 = 1;
  int R2 = 1;
  std::uint64_t basis_seed = 0;
};

// Random drop over a square area: BSs and MSs are placed uniformly, a link
// exists iff its distance is at most L_km, and the transmit null space of a
// connected link collects the DFT directions that stay outside the angular
// band scattered by a disc of radius S_km around the receiver.
// pathloss_exp = 0 keeps unit gain on connected links; a positive value
// applies gain = D^(-pathloss_exp / 2) with D clamped to 0.1 km.
struct GeometricTopology {
  double L_km = 15.0;
  double S_km = 3.0;
  double area_km = 30.0;
  double pathloss_exp = 0.0;
};

using Topology = std::variant<FullyConnected, SymmetricTopology, GeometricTopology>;

struct NetworkConfig {
  int num_bs = 0;                // G
  int ms_per_bs = 0;             // K
  std::vector<int> bs_antennas;  // size G
  std::vector<int> ms_antennas;  // size G*K, index g*K + k
  std::vector<int> max_streams;  // size G*K, requested streams per MS
  Topology topology = FullyConnected{};
  double power = 1.0;  // total transmit power per BS, linear scale

  int links() const { return num_bs * ms_per_bs; }
  int ms_index(int g, int k) const { return g * ms_per_bs + k; }
  int nt(int g) const { return bs_antennas.at(static_cast<size_t>(g)); }
  int nr(int g, int k) const {
    return ms_antennas.at(static_cast<size_t>(ms_index(g, k)));
  }
  int dmax(int g, int k) const {
    return max_streams.at(static_cast<size_t>(ms_index(g, k)));
  }
};

// Convenience constructor for homogeneous networks.
inline NetworkConfig make_uniform_config(int num_bs, int ms_per_bs, int nt,
                                         int nr, int dmax,
                                         Topology topology = FullyConnected{}) {
  NetworkConfig cfg;
  cfg.num_bs = num_bs;
  cfg.ms_per_bs = ms_per_bs;
  cfg.bs_antennas.assign(static_cast<size_t>(num_bs), nt);
  cfg.ms_antennas.assign(static_cast<size_t>(num_bs * ms_per_bs), nr);
  cfg.max_streams.assign(static_cast<size_t>(num_bs * ms_per_bs), dmax);
  cfg.topology = topology;
  return cfg;
}

inline void validate(const NetworkConfig& cfg) {
  if (cfg.num_bs < 1 || cfg.ms_per_bs < 1) {
    throw std::invalid_argument("config: need at least one BS and one MS per BS");
  }
  if (cfg.bs_antennas.size() != static_cast<size_t>(cfg.num_bs) ||
      cfg.ms_antennas.size() != static_cast<size_t>(cfg.links()) ||
      cfg.max_streams.size() != static_cast<size_t>(cfg.links())) {
    throw std::invalid_argument("config: antenna/stream array sizes disagree with G, K");
  }
  for (int nt : cfg.bs_antennas) {
    if (nt < 1 || nt > kMaxAntennas) {
      throw std::invalid_argument("config: BS antenna count out of range");
    }
  }
  for (int nr : cfg.ms_antennas) {
    if (nr < 1 || nr > kMaxAntennas) {
      throw std::invalid_argument("config: MS antenna count out of range");
    }
  }
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      const int d = cfg.dmax(g, k);
      if (d < 0 || d > std::min(cfg.nr(g, k), cfg.nt(g))) {
        throw std::invalid_argument("config: max_streams outside [0, min(Nr, Nt)]");
      }
    }
  }
  if (const auto* sym = std::get_if<SymmetricTopology>(&cfg.topology)) {
    const int nt = cfg.bs_antennas.front();
    const int nr = cfg.ms_antennas.front();
    for (int v : cfg.bs_antennas) {
      if (v != nt) throw std::invalid_argument("symmetric: BS antennas must be uniform");
    }
    for (int v : cfg.ms_antennas) {
      if (v != nr) throw std::invalid_argument("symmetric: MS antennas must be uniform");
    }
    if (sym->J < 1) throw std::invalid_argument("symmetric: J must be >= 1");
    if (sym->R1 < 1 || sym->R1 > nr || nr > nt) {
      throw std::invalid_argument("symmetric: need 1 <= R1 <= Nr <= Nt");
    }
    if (sym->R2 < 1 || sym->R2 > nr) {
      throw std::invalid_argument("symmetric: need 1 <= R2 <= Nr");
    }
    for (int g = 0; g < cfg.num_bs; ++g) {
      int sum = 0;
      for (int k = 0; k < cfg.ms_per_bs; ++k) sum += cfg.dmax(g, k);
      if (sum > nt) throw std::invalid_argument("symmetric: K * d_max exceeds Nt");
    }
  }
  if (const auto* geo = std::get_if<GeometricTopology>(&cfg.topology)) {
    if (geo->L_km <= 0 || geo->S_km <= 0 || geo->area_km <= 0) {
      throw std::invalid_argument("geometric: L, S and area must be positive");
    }
    if (geo->pathloss_exp < 0) {
      throw std::invalid_argument("geometric: path loss exponent must be >= 0");
    }
  }
}

struct LinkSpec {
  double gain = 0.0;  // amplitude factor; 0 encodes a disconnected link
  Subspace tx_null;   // in C^{Nt(n)}
  Subspace rx_null;   // in C^{Nr(g,k)}
};

struct ConnectivitySpec {
  NetworkConfig cfg;
  std::vector<LinkSpec> links;  // index (g*K + k)*G + n

  const LinkSpec& link(int g, int k, int n) const {
    return links.at(static_cast<size_t>((g * cfg.ms_per_bs + k) * cfg.num_bs + n));
  }
  LinkSpec& link(int g, int k, int n) {
    return links.at(static_cast<size_t>((g * cfg.ms_per_bs + k) * cfg.num_bs + n));
  }
  bool connected(int g, int k, int n) const { return link(g, k, n).gain > 0.0; }

  // Channel rank implied by the link structure (almost surely attained).
  int link_rank(int g, int k, int n) const {
    const LinkSpec& l = link(g, k, n);
    if (l.gain <= 0.0) return 0;
    const int rows = cfg.nr(g, k) - static_cast<int>(l.rx_null.dim());
    const int cols = cfg.nt(n) - static_cast<int>(l.tx_null.dim());
    return std::max(0, std::min(rows, cols));
  }
};

inline ConnectivitySpec build_full_connectivity(const NetworkConfig& cfg) {
  validate(cfg);
  ConnectivitySpec spec;
  spec.cfg = cfg;
  spec.links.resize(static_cast<size_t>(cfg.links() * cfg.num_bs));
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      for (int n = 0; n < cfg.num_bs; ++n) {
        LinkSpec& l = spec.link(g, k, n);
        l.gain = 1.0;
        l.tx_null = zero_subspace(static_cast<arma::uword>(cfg.nt(n)));
        l.rx_null = zero_subspace(static_cast<arma::uword>(cfg.nr(g, k)));
      }
    }
  }
  return spec;
}

namespace detail {

// Basis columns of BS n for the symmetric layout: canonical vectors, or the
// columns of a seeded random unitary when basis_seed is nonzero.
inline arma::cx_mat symmetric_basis(int nt, std::uint64_t basis_seed, int n) {
  if (basis_seed == 0) return arma::eye<arma::cx_mat>(nt, nt);
  Rng rng(mix_seed(basis_seed, static_cast<std::uint64_t>(n)));
  arma::cx_mat q;
  arma::cx_mat r;
  arma::qr(q, r, rng.cgaussian_matrix(nt, nt));
  return q;
}

// Span of the basis vectors whose index is NOT in the cyclic block
// [block * width, (block + 1) * width) taken modulo nt.
inline Subspace block_complement_span(const arma::cx_mat& basis, int nt,
                                      int block, int width) {
  std::vector<bool> excluded(static_cast<size_t>(nt), false);
  for (int t = 0; t < width; ++t) {
    const int q = ((block * width + t) % nt + nt) % nt;
    excluded[static_cast<size_t>(q)] = true;
  }
  arma::cx_mat cols(static_cast<arma::uword>(nt), 0);
  for (int q = 0; q < nt; ++q) {
    if (!excluded[static_cast<size_t>(q)]) {
      cols = arma::join_rows(cols, basis.col(static_cast<arma::uword>(q)));
    }
  }
  return {cols};
}

}  // namespace detail

inline ConnectivitySpec build_symmetric_connectivity(const NetworkConfig& cfg) {
  validate(cfg);
  const auto* sym = std::get_if<SymmetricTopology>(&cfg.topology);
  if (sym == nullptr) {
    throw std::invalid_argument("build_symmetric_connectivity: topology is not symmetric");
  }
  const int G = cfg.num_bs;
  const int nt = cfg.bs_antennas.front();
  const int nr = cfg.ms_antennas.front();
  ConnectivitySpec spec;
  spec.cfg = cfg;
  spec.links.resize(static_cast<size_t>(cfg.links() * G));
  std::vector<arma::cx_mat> bases;
  bases.reserve(static_cast<size_t>(G));
  for (int n = 0; n < G; ++n) {
    bases.push_back(detail::symmetric_basis(nt, sym->basis_seed, n));
  }
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      for (int n = 0; n < G; ++n) {
        LinkSpec& l = spec.link(g, k, n);
        const int forward = ((n - g) % G + G) % G;
        const int cyc = std::min(forward, G - forward);
        if (g == n) {
          l.gain = 1.0;
          l.tx_null = detail::block_complement_span(bases[static_cast<size_t>(n)],
                                                    nt, k, sym->R1);
          l.rx_null = zero_subspace(static_cast<arma::uword>(nr));
        } else if (cyc <= sym->J) {
          l.gain = 1.0;
          l.tx_null = detail::block_complement_span(bases[static_cast<size_t>(n)],
                                                    nt, forward, sym->R2);
          l.rx_null = zero_subspace(static_cast<arma::uword>(nr));
        } else {
          l.gain = 0.0;
          l.tx_null = full_subspace(static_cast<arma::uword>(nt));
          l.rx_null = full_subspace(static_cast<arma::uword>(nr));
        }
      }
    }
  }
  return spec;
}

namespace detail {

// Unit-norm complex sinusoid e_n(omega) = n^{-1/2} [1, e^{-j2pi w}, ...].
inline arma::cx_vec dft_direction(int n, double omega) {
  arma::cx_vec v(static_cast<arma::uword>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int t = 0; t < n; ++t) {
    const double phase = -2.0 * M_PI * omega * static_cast<double>(t);
    v(static_cast<arma::uword>(t)) =
        std::complex<double>(std::cos(phase), std::sin(phase)) * scale;
  }
  return v;
}

// Distance on the unit circle (values taken modulo 1) from point p to the
// closed interval [a, b].
inline double circular_distance_to_interval(double p, double a, double b) {
  double best = 1.0;
  for (int t = -2; t <= 2; ++t) {
    const double q = p + static_cast<double>(t);
    double dist = 0.0;
    if (q < a) {
      dist = a - q;
    } else if (q > b) {
      dist = q - b;
    }
    best = std::min(best, dist);
  }
  return best;
}

}  // namespace detail

// Transmit null space of a connected geometric link with Nt antennas,
// departure angle theta and angular half-width fa: the span of the DFT
// directions q/Nt whose circular (mod 1) distance to the arc swept by
// sin(theta') / 2, theta' in [theta - fa, theta + fa], exceeds 1/Nt.
// fa >= pi means rich scattering and yields the zero subspace.
inline Subspace scattering_null_space(int nt, double theta, double fa) {
  if (nt < 1) throw std::invalid_argument("scattering_null_space: bad Nt");
  if (fa >= M_PI) return zero_subspace(static_cast<arma::uword>(nt));
  const double lo = theta - fa;
  const double hi = theta + fa;
  double smin = std::min(std::sin(lo), std::sin(hi));
  double smax = std::max(std::sin(lo), std::sin(hi));
  // Interior extrema of sin at odd multiples of pi/2.
  for (double x = std::ceil(lo / M_PI_2) * M_PI_2; x <= hi; x += M_PI_2) {
    smin = std::min(smin, std::sin(x));
    smax = std::max(smax, std::sin(x));
  }
  const double a = smin / 2.0;
  const double b = smax / 2.0;
  arma::cx_mat cols(static_cast<arma::uword>(nt), 0);
  for (int q = 0; q < nt; ++q) {
    const double p = static_cast<double>(q) / static_cast<double>(nt);
    if (detail::circular_distance_to_interval(p, a, b) >
        1.0 / static_cast<double>(nt)) {
      cols = arma::join_rows(cols, detail::dft_direction(nt, p));
    }
  }
  return {cols};
}

inline ConnectivitySpec build_geometric_connectivity(const NetworkConfig& cfg,
                                                     std::uint64_t placement_seed) {
  validate(cfg);
  const auto* geo = std::get_if<GeometricTopology>(&cfg.topology);
  if (geo == nullptr) {
    throw std::invalid_argument("build_geometric_connectivity: topology is not geometric");
  }
  const int G = cfg.num_bs;
  const int K = cfg.ms_per_bs;
  Rng rng(mix_seed(placement_seed, 0x9b5));
  std::vector<double> bs_x(static_cast<size_t>(G)), bs_y(static_cast<size_t>(G));
  for (int n = 0; n < G; ++n) {
    bs_x[static_cast<size_t>(n)] = rng.uniform() * geo->area_km;
    bs_y[static_cast<size_t>(n)] = rng.uniform() * geo->area_km;
  }
  std::vector<double> drop_x(static_cast<size_t>(G * K)), drop_y(static_cast<size_t>(G * K));
  for (int u = 0; u < G * K; ++u) {
    drop_x[static_cast<size_t>(u)] = rng.uniform() * geo->area_km;
    drop_y[static_cast<size_t>(u)] = rng.uniform() * geo->area_km;
  }
  // Balanced nearest-server association: MS drops are matched to BSs in
  // order of increasing distance, each BS taking at most K of them, so the
  // k-th MS of BS g is an MS that BS g plausibly serves rather than an
  // arbitrary point of the whole area.
  struct Edge {
    double dist;
    int drop;
    int bs;
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(G * K * G));
  for (int u = 0; u < G * K; ++u) {
    for (int n = 0; n < G; ++n) {
      const double dx = drop_x[static_cast<size_t>(u)] - bs_x[static_cast<size_t>(n)];
      const double dy = drop_y[static_cast<size_t>(u)] - bs_y[static_cast<size_t>(n)];
      edges.push_back({std::sqrt(dx * dx + dy * dy), u, n});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.dist, a.drop, a.bs) < std::tie(b.dist, b.drop, b.bs);
  });
  std::vector<int> owner(static_cast<size_t>(G * K), -1);
  std::vector<std::vector<int>> members(static_cast<size_t>(G));
  for (const Edge& e : edges) {
    if (owner[static_cast<size_t>(e.drop)] >= 0) continue;
    auto& cell = members[static_cast<size_t>(e.bs)];
    if (static_cast<int>(cell.size()) >= K) continue;
    owner[static_cast<size_t>(e.drop)] = e.bs;
    cell.push_back(e.drop);
  }
  std::vector<double> ms_x(static_cast<size_t>(G * K)), ms_y(static_cast<size_t>(G * K));
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      const int drop = members[static_cast<size_t>(g)][static_cast<size_t>(k)];
      const size_t u = static_cast<size_t>(cfg.ms_index(g, k));
      ms_x[u] = drop_x[static_cast<size_t>(drop)];
      ms_y[u] = drop_y[static_cast<size_t>(drop)];
    }
  }
  ConnectivitySpec spec;
  spec.cfg = cfg;
  spec.links.resize(static_cast<size_t>(cfg.links() * G));
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      const int u = cfg.ms_index(g, k);
      for (int n = 0; n < G; ++n) {
        LinkSpec& l = spec.link(g, k, n);
        const int nt = cfg.nt(n);
        const int nr = cfg.nr(g, k);
        const double dx = ms_x[static_cast<size_t>(u)] - bs_x[static_cast<size_t>(n)];
        const double dy = ms_y[static_cast<size_t>(u)] - bs_y[static_cast<size_t>(n)];
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist > geo->L_km) {
          l.gain = 0.0;
          l.tx_null = full_subspace(static_cast<arma::uword>(nt));
          l.rx_null = full_subspace(static_cast<arma::uword>(nr));
          continue;
        }
        l.gain = geo->pathloss_exp > 0.0
                     ? std::pow(std::max(dist, 0.1), -geo->pathloss_exp / 2.0)
                     : 1.0;
        const double theta = std::atan2(dy, dx);
        const double fa =
            geo->S_km >= dist ? M_PI : std::asin(geo->S_km / dist);
        l.tx_null = scattering_null_space(nt, theta, fa);
        l.rx_null = zero_subspace(static_cast<arma::uword>(nr));
      }
    }
  }
  return spec;
}

inline ConnectivitySpec build_connectivity(const NetworkConfig& cfg,
                                           std::uint64_t placement_seed) {
  if (std::holds_alternative<SymmetricTopology>(cfg.topology)) {
    return build_symmetric_connectivity(cfg);
  }
  if (std::holds_alternative<GeometricTopology>(cfg.topology)) {
    return build_geometric_connectivity(cfg, placement_seed);
  }
  return build_full_connectivity(cfg);
}

struct ChannelSet {
  ConnectivitySpec spec;
  std::vector<arma::cx_mat> h;  // index (g*K + k)*G + n, each Nr x Nt
  std::uint64_t seed = 0;

  const arma::cx_mat& channel(int g, int k, int n) const {
    return h.at(static_cast<size_t>((g * spec.cfg.ms_per_bs + k) * spec.cfg.num_bs + n));
  }
};

// Draws one fading realisation. Disconnected links get exact zero matrices.
// Each link consumes an independent substream of the seed, so the result
// does not depend on traversal order.
inline ChannelSet sample_channels(const ConnectivitySpec& spec, std::uint64_t seed) {
  ChannelSet ch;
  ch.spec = spec;
  ch.seed = seed;
  const int G = spec.cfg.num_bs;
  const int K = spec.cfg.ms_per_bs;
  ch.h.resize(static_cast<size_t>(G * K * G));
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < G; ++n) {
        const LinkSpec& l = spec.link(g, k, n);
        const arma::uword nr = static_cast<arma::uword>(spec.cfg.nr(g, k));
        const arma::uword nt = static_cast<arma::uword>(spec.cfg.nt(n));
        arma::cx_mat& h = ch.h[static_cast<size_t>((g * K + k) * G + n)];
        if (l.gain <= 0.0) {
          h = arma::zeros<arma::cx_mat>(nr, nt);
          continue;
        }
        const double rank_rx = static_cast<double>(nr - l.rx_null.dim());
        const double rank_tx = static_cast<double>(nt - l.tx_null.dim());
        const arma::cx_mat proj_rx =
            arma::eye<arma::cx_mat>(nr, nr) - l.rx_null.projector();
        const arma::cx_mat proj_tx =
            arma::eye<arma::cx_mat>(nt, nt) - l.tx_null.projector();
        const arma::cx_mat a = proj_rx / std::sqrt(rank_rx);
        const arma::cx_mat b = proj_tx / std::sqrt(rank_tx);
        const std::uint64_t link_id =
            static_cast<std::uint64_t>((g * K + k) * G + n);
        Rng rng(mix_seed(seed, link_id));
        const arma::cx_mat hw = rng.cgaussian_matrix(nr, nt);
        h = l.gain * (a.t() * hw * b);
      }
    }
  }
  return ch;
}

// Text tensor dump: one comment line with the network shape, a header row,
// then one row per complex entry.
inline void write_channels(std::ostream& os, const ChannelSet& ch) {
  const int G = ch.spec.cfg.num_bs;
  const int K = ch.spec.cfg.ms_per_bs;
  os << "# channel tensor: G=" << G << " K=" << K << " seed=" << ch.seed << "\n";
  os << "g,k,n,row,col,re,im\n";
  char buf[128];
  for (int g = 0; g < G; ++g) {
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < G; ++n) {
        const arma::cx_mat& h = ch.channel(g, k, n);
        for (arma::uword c = 0; c < h.n_cols; ++c) {
          for (arma::uword r = 0; r < h.n_rows; ++r) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%d,%llu,%llu,%.17g,%.17g\n",
                          g, k, n, static_cast<unsigned long long>(r),
                          static_cast<unsigned long long>(c), h(r, c).real(),
                          h(r, c).imag());
            os << buf;
          }
        }
      }
    }
  }
}

}  // namespace iacell
