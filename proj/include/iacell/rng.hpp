// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random number generation. All stochastic parts of the
// toolkit (channel fading, precoder initialisation, node placement) draw
// from this generator so that a fixed seed reproduces a run bit for bit:
// std::mt19937_64 has a standard-mandated output sequence and the
// uniform/Gaussian transforms below avoid the implementation-defined
// std::*_distribution adaptors.

#pragma once

#include <armadillo>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>

namespace iacell {

// Derives an independent stream seed from a base seed (SplitMix64 finaliser).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform draw in [0, 1) with 53 significant bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound).
  std::uint64_t integer(std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % bound;
  }

  // Standard real normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  // Circularly symmetric complex normal with unit variance, CN(0, 1).
  std::complex<double> cgaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  // Matrix with i.i.d. CN(0, 1) entries, filled column-major.
  arma::cx_mat cgaussian_matrix(arma::uword rows, arma::uword cols) {
    arma::cx_mat m(rows, cols);
    for (arma::uword c = 0; c < cols; ++c) {
      for (arma::uword r = 0; r < rows; ++r) m(r, c) = cgaussian();
    }
    return m;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace iacell
