// SPDX-License-Identifier: Apache-2.0

#include "iacell/allocator.hpp"

#include <armadillo>
#include <gtest/gtest.h>

#include <utility>
#include <vector>

#include "iacell/evaluation.hpp"
#include "iacell/feasibility.hpp"
#include "iacell/network.hpp"
#include "iacell/subspace.hpp"

namespace iacell {
namespace {

TEST(GreedyFull, UncontestedCellKeepsEverything) {
  // A single cell has no inter-cell constraints to satisfy.
  const NetworkConfig cfg = make_uniform_config(1, 2, 4, 2, 2);
  const StreamAssignment d = assign_greedy_full(cfg);
  EXPECT_EQ(d.total(), 4);
}

TEST(GreedyFull, OverloadedCellShedsToAntennaBudget) {
  // Three users of two streams each cannot leave a four-antenna BS.
  const NetworkConfig cfg = make_uniform_config(1, 3, 4, 2, 2);
  const StreamAssignment d = assign_greedy_full(cfg);
  EXPECT_EQ(d.total(), 4);
  EXPECT_TRUE(feasible_tree(build_instance_full(d, cfg)).feasible);
}

TEST(GreedyFull, DenseCellularNetworkKeepsOneStreamEach) {
  // Three cells, two users each, 5x2 antennas: six streams total are
  // supportable and the greedy sheds exactly down to one per user.
  const NetworkConfig cfg = make_uniform_config(3, 2, 5, 2, 2);
  std::vector<std::pair<int, int>> removals;
  const StreamAssignment d = assign_greedy_full(cfg, &removals);
  EXPECT_EQ(d.total(), 6);
  for (int g = 0; g < 3; ++g) {
    for (int k = 0; k < 2; ++k) EXPECT_EQ(d.streams(g, k), 1);
  }
  EXPECT_EQ(static_cast<int>(removals.size()), 6);
  EXPECT_TRUE(feasible_tree(build_instance_full(d, cfg)).feasible);
}

TEST(GreedyFull, RequestedStreamsAreRespected) {
  const NetworkConfig cfg = make_uniform_config(3, 2, 5, 2, 1);
  const StreamAssignment d = assign_greedy_full(cfg);
  EXPECT_EQ(d.total(), 6);  // already feasible, nothing removed
}

TEST(CommonNulls, FullyConnectedHasNoExploitableNulls) {
  const NetworkConfig cfg = make_uniform_config(3, 2, 5, 2, 1);
  const ConnectivitySpec spec = build_full_connectivity(cfg);
  const NullSpaceMap map = common_null_spaces(spec, 0);
  // The empty set maps to the full space; every out-of-cell user
  // contributes a zero-dimensional null, and nothing extends further.
  ASSERT_EQ(map.size(), 5u);  // {} plus four singletons
  EXPECT_EQ(map.at({}).dim(), 5u);
  for (const auto& entry : map) {
    if (!entry.first.empty()) {
      EXPECT_EQ(entry.first.size(), 1u);
      EXPECT_EQ(entry.second.dim(), 0u);
    }
  }
}

TEST(CommonNulls, SymmetricBlocksIntersect) {
  // G=3, J=1 connects everything; BS 0 sees two out-of-cell users with
  // 3-dimensional nulls meeting in a 2-dimensional common null.
  const NetworkConfig cfg =
      make_uniform_config(3, 1, 4, 2, 1, SymmetricTopology{1, 2, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  const NullSpaceMap map = common_null_spaces(spec, 0);
  ASSERT_EQ(map.size(), 4u);  // {}, two singletons, one pair
  int pairs = 0;
  for (const auto& entry : map) {
    if (entry.first.size() == 1) EXPECT_EQ(entry.second.dim(), 3u);
    if (entry.first.size() == 2) {
      EXPECT_EQ(entry.second.dim(), 2u);
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 1);
}

TEST(CoreDesign, ClipsToUsableDimensions) {
  // Rank-1 direct links leave at most one usable stream per user no matter
  // what was requested.
  const NetworkConfig cfg =
      make_uniform_config(2, 1, 3, 2, 2, SymmetricTopology{1, 1, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  const PartialAssignment pa = assign_greedy_partial(spec);
  for (int g = 0; g < 2; ++g) EXPECT_LE(pa.d.streams(g, 0), 1);
  EXPECT_GE(pa.d.total(), 2);  // rank-1 cross links leave both streams alive
}

TEST(CoreDesign, CoreSpacesAvoidDirectNulls) {
  const NetworkConfig cfg =
      make_uniform_config(4, 1, 6, 3, 2, SymmetricTopology{1, 3, 2, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  StreamAssignment d;
  d.d.set_size(4, 1);
  d.d.fill(2);
  const SubspacePlan plan = design_core_spaces(spec, d);
  for (int g = 0; g < 4; ++g) {
    const MsPlan& mp = plan.at(g, 0);
    EXPECT_EQ(mp.core.dim(), 2u);
    // A core direction inside the direct link's transmit null space would
    // be invisible to its own receiver.
    const Subspace blocked = intersect(mp.core, spec.link(g, 0, g).tx_null);
    EXPECT_EQ(blocked.dim(), 0u);
  }
}

TEST(FreeDesign, ReceiveSpacesStayVisible) {
  const NetworkConfig cfg =
      make_uniform_config(4, 1, 6, 3, 1, SymmetricTopology{1, 2, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  StreamAssignment d;
  d.d.set_size(4, 1);
  d.d.fill(1);
  SubspacePlan plan = design_core_spaces(spec, d);
  plan = design_free_spaces(spec, d, std::move(plan));
  for (int g = 0; g < 4; ++g) {
    const MsPlan& mp = plan.at(g, 0);
    EXPECT_GE(mp.receive.dim(), 1u);
    EXPECT_LE(mp.core.dim() + mp.free_tx.dim(), 6u);
    // Core and free space never overlap.
    EXPECT_EQ(intersect(mp.core, mp.free_tx).dim(), 0u);
  }
}

TEST(GreedyPartial, MatchesFullCountingOnGenericNetworks) {
  // On fully connected networks the subspace-aware rules must reproduce
  // the antenna-counting result.
  const NetworkConfig cfgs[] = {
      make_uniform_config(3, 2, 5, 2, 2),  // sheds half the streams
      make_uniform_config(3, 1, 2, 2, 1),  // classic three-user network
      make_uniform_config(2, 1, 4, 3, 2),
  };
  for (const NetworkConfig& cfg : cfgs) {
    const ConnectivitySpec spec = build_full_connectivity(cfg);
    const StreamAssignment full = assign_greedy_full(cfg);
    const PartialAssignment partial = assign_greedy_partial(spec);
    EXPECT_TRUE(
        arma::approx_equal(full.d, partial.d.d, "absdiff", arma::sword(0)))
        << "G=" << cfg.num_bs << " K=" << cfg.ms_per_bs;
  }
}

TEST(GreedyPartial, BeatsSymmetricLowerBound) {
  // Per-user stream count from the symmetric program is achievable, so the
  // greedy may never end below it.
  const NetworkConfig cfg =
      make_uniform_config(6, 2, 4, 2, 1, SymmetricTopology{1, 2, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  const PartialAssignment pa = assign_greedy_partial(spec);
  DoFBoundQuery q;
  q.G = 6;
  q.K = 2;
  q.J = 1;
  q.Nt = 4;
  q.Nr = 2;
  q.R1 = 2;
  q.R2 = 1;
  q.d_f = 1;
  const int dstar = dof_bound(q);
  EXPECT_EQ(dstar, 1);
  EXPECT_GE(pa.d.total(), 6 * 2 * dstar);
  EXPECT_TRUE(
      feasible_tree(build_instance_partial(pa.d, pa.plan, spec)).feasible);
}

TEST(GreedyPartial, DisconnectedDirectLinkGetsNothing) {
  // When a user's direct link is severed, it cannot carry streams and the
  // allocator starts (and stays) at zero for it.
  const NetworkConfig cfg = make_uniform_config(
      2, 1, 3, 2, 1, GeometricTopology{0.5, 0.1, 30.0, 0.0});
  // Radius 0.5 km in a 30 km square: almost surely nothing is connected.
  const ConnectivitySpec spec = build_geometric_connectivity(cfg, 3);
  bool all_disconnected = true;
  for (int g = 0; g < 2; ++g) {
    if (spec.connected(g, 0, g)) all_disconnected = false;
  }
  if (!all_disconnected) GTEST_SKIP() << "unlucky placement";
  const PartialAssignment pa = assign_greedy_partial(spec);
  EXPECT_EQ(pa.d.total(), 0);
}

}  // namespace
}  // namespace iacell
