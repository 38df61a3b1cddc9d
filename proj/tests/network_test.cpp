// SPDX-License-Identifier: Apache-2.0

#include "iacell/network.hpp"

#include <armadillo>
#include <gtest/gtest.h>

#include <cmath>

#include "iacell/subspace.hpp"

namespace iacell {
namespace {

TEST(NetworkConfig, ValidateRejectsBadShapes) {
  NetworkConfig cfg = make_uniform_config(2, 1, 4, 2, 1);
  EXPECT_NO_THROW(validate(cfg));
  cfg.bs_antennas[0] = 0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = make_uniform_config(2, 1, 4, 2, 3);  // more streams than antennas
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = make_uniform_config(0, 1, 4, 2, 1);
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(NetworkConfig, SymmetricPremises) {
  NetworkConfig cfg =
      make_uniform_config(3, 1, 4, 2, 1, SymmetricTopology{1, 2, 1, 0});
  EXPECT_NO_THROW(validate(cfg));
  cfg.topology = SymmetricTopology{1, 3, 1, 0};  // R1 > Nr
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg.topology = SymmetricTopology{0, 2, 1, 0};  // J < 1
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg.topology = SymmetricTopology{1, 2, 3, 0};  // R2 > Nr
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(Connectivity, FullyConnectedHasGenericLinks) {
  const NetworkConfig cfg = make_uniform_config(3, 2, 5, 2, 1);
  const ConnectivitySpec spec = build_full_connectivity(cfg);
  for (int g = 0; g < 3; ++g) {
    for (int k = 0; k < 2; ++k) {
      for (int n = 0; n < 3; ++n) {
        EXPECT_TRUE(spec.connected(g, k, n));
        EXPECT_EQ(spec.link(g, k, n).tx_null.dim(), 0u);
        EXPECT_EQ(spec.link(g, k, n).rx_null.dim(), 0u);
        EXPECT_EQ(spec.link_rank(g, k, n), 2);
      }
    }
  }
}

TEST(Connectivity, SymmetricCyclicReach) {
  const NetworkConfig cfg =
      make_uniform_config(5, 1, 4, 2, 1, SymmetricTopology{1, 2, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  for (int g = 0; g < 5; ++g) {
    for (int n = 0; n < 5; ++n) {
      const int dist = std::min((g - n + 5) % 5, (n - g + 5) % 5);
      EXPECT_EQ(spec.connected(g, 0, n), dist <= 1) << g << "," << n;
    }
  }
  // Connected links: direct rank R1, cross rank R2, no receive correlation.
  EXPECT_EQ(spec.link(0, 0, 0).tx_null.dim(), 2u);  // Nt - R1
  EXPECT_EQ(spec.link_rank(0, 0, 0), 2);
  EXPECT_EQ(spec.link(0, 0, 1).tx_null.dim(), 3u);  // Nt - R2
  EXPECT_EQ(spec.link_rank(0, 0, 1), 1);
  EXPECT_EQ(spec.link(0, 0, 0).rx_null.dim(), 0u);
  // Disconnected links carry a full transmit null space and rank zero.
  EXPECT_EQ(spec.link(0, 0, 2).tx_null.dim(), 4u);
  EXPECT_EQ(spec.link_rank(0, 0, 2), 0);
}

TEST(Connectivity, SymmetricBlocksDifferByOffset) {
  // Two interfering cells at different cyclic offsets must see different
  // transmit-correlation blocks, otherwise their interference could not be
  // told apart.
  const NetworkConfig cfg =
      make_uniform_config(5, 1, 6, 3, 1, SymmetricTopology{2, 2, 2, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  const Subspace& n1 = spec.link(1, 0, 0).tx_null;  // BS 0 into cell 1
  const Subspace& n2 = spec.link(2, 0, 0).tx_null;  // BS 0 into cell 2
  EXPECT_EQ(n1.dim(), 4u);
  EXPECT_EQ(n2.dim(), 4u);
  EXPECT_FALSE(subspace_equal(n1, n2));
}

TEST(Connectivity, ScatteringNullSpaceFrozenExample) {
  // Eight transmit directions, receiver broadside, narrow angular band:
  // exactly the five interior grid directions stay out of the band.
  const Subspace null = scattering_null_space(8, 0.0, 0.05);
  EXPECT_EQ(null.dim(), 5u);
  // Widening the band to everything removes every safe direction.
  EXPECT_EQ(scattering_null_space(8, 0.0, M_PI).dim(), 0u);
}

TEST(Connectivity, GeometricRespectsRadius) {
  const NetworkConfig cfg = make_uniform_config(
      6, 2, 4, 2, 1, GeometricTopology{12.0, 3.0, 30.0, 0.0});
  const ConnectivitySpec spec = build_geometric_connectivity(cfg, 42);
  int connected = 0;
  int disconnected = 0;
  for (int g = 0; g < 6; ++g) {
    for (int k = 0; k < 2; ++k) {
      for (int n = 0; n < 6; ++n) {
        if (spec.connected(g, k, n)) {
          EXPECT_EQ(spec.link(g, k, n).gain, 1.0);  // pathloss_exp = 0
          ++connected;
        } else {
          EXPECT_EQ(spec.link_rank(g, k, n), 0);
          ++disconnected;
        }
      }
    }
  }
  // A 12 km radius in a 30 km square leaves both kinds of links.
  EXPECT_GT(connected, 0);
  EXPECT_GT(disconnected, 0);
  // Same seed, same draw.
  const ConnectivitySpec again = build_geometric_connectivity(cfg, 42);
  for (size_t i = 0; i < spec.links.size(); ++i) {
    EXPECT_EQ(spec.links[i].gain, again.links[i].gain);
  }
}

TEST(Channels, SamplesRespectNullSpacesAndSeed) {
  const NetworkConfig cfg =
      make_uniform_config(4, 1, 5, 3, 1, SymmetricTopology{1, 2, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  const ChannelSet ch = sample_channels(spec, 9);
  for (int g = 0; g < 4; ++g) {
    for (int n = 0; n < 4; ++n) {
      const arma::cx_mat& h = ch.channel(g, 0, n);
      ASSERT_EQ(h.n_rows, 3u);
      ASSERT_EQ(h.n_cols, 5u);
      if (!spec.connected(g, 0, n)) {
        EXPECT_EQ(arma::norm(h, "fro"), 0.0);
        continue;
      }
      // The transmit null space is invisible through the channel.
      EXPECT_NEAR(
          arma::norm(arma::cx_mat(h * spec.link(g, 0, n).tx_null.basis), "fro"),
          0.0, 1e-12);
      EXPECT_GT(arma::norm(h, "fro"), 0.0);
    }
  }
  const ChannelSet same = sample_channels(spec, 9);
  const ChannelSet other = sample_channels(spec, 10);
  EXPECT_EQ(arma::norm(ch.channel(1, 0, 0) - same.channel(1, 0, 0), "fro"),
            0.0);
  EXPECT_GT(arma::norm(ch.channel(1, 0, 0) - other.channel(1, 0, 0), "fro"),
            0.0);
}

TEST(Channels, FullyConnectedChannelsAreDense) {
  const NetworkConfig cfg = make_uniform_config(2, 2, 3, 2, 1);
  const ChannelSet ch = sample_channels(build_full_connectivity(cfg), 5);
  for (int g = 0; g < 2; ++g) {
    for (int k = 0; k < 2; ++k) {
      for (int n = 0; n < 2; ++n) {
        EXPECT_GT(arma::norm(ch.channel(g, k, n), "fro"), 0.0);
      }
    }
  }
}

}  // namespace
}  // namespace iacell
