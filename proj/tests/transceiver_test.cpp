// SPDX-License-Identifier: Apache-2.0

#include "iacell/transceiver.hpp"

#include <armadillo>
#include <gtest/gtest.h>

#include <cstddef>
#include <utility>

#include "iacell/network.hpp"
#include "iacell/plan.hpp"
#include "iacell/subspace.hpp"

namespace iacell {
namespace {

// Dense three-cell network where six aligned streams are known to fit.
ChannelSet dense_channels(std::uint64_t seed) {
  const NetworkConfig cfg = make_uniform_config(3, 2, 5, 2, 1);
  return sample_channels(build_full_connectivity(cfg), seed);
}

StreamAssignment uniform_streams(const NetworkConfig& cfg, int d) {
  StreamAssignment a;
  a.d.set_size(static_cast<arma::uword>(cfg.num_bs),
               static_cast<arma::uword>(cfg.ms_per_bs));
  a.d.fill(d);
  return a;
}

void expect_monotone_trace(const std::vector<double>& trace) {
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    EXPECT_LE(trace[i + 1], trace[i] + 1e-12 * std::max(1.0, trace[i]))
        << "half-sweep " << i;
  }
}

TEST(Suppress, DrivesLeakageToZeroOnAlignableNetwork) {
  const ChannelSet ch = dense_channels(7);
  const StreamAssignment d = uniform_streams(ch.spec.cfg, 1);
  const SubspacePlan plan = make_full_structure_plan(ch.spec.cfg, d);
  SuppressOptions opts;
  opts.max_iters = 20000;
  opts.rel_tol = 1e-14;
  opts.abs_floor = 1e-16;
  opts.validate_updates = true;
  const auto [t, report] = suppress_inter_cell(ch, d, plan, opts);
  EXPECT_TRUE(report.converged);
  EXPECT_LT(report.final_leakage, 1e-9);
  EXPECT_LE(report.max_update_deviation, 1e-8);
  expect_monotone_trace(report.trace);
  // Trace bookkeeping: initial value plus two entries per sweep.
  EXPECT_EQ(report.trace.size(),
            1u + 2u * static_cast<std::size_t>(report.iterations));
  // Intermediate precoders respect the structure: core part plus a shift
  // inside the free space only.
  for (int g = 0; g < 3; ++g) {
    for (int k = 0; k < 2; ++k) {
      const MsPlan& mp = plan.at(g, k);
      const arma::cx_mat shift =
          t.v_int[static_cast<std::size_t>(ch.spec.cfg.ms_index(g, k))] -
          mp.core.basis;
      const arma::cx_mat outside =
          shift - mp.free_tx.projector() * shift;
      EXPECT_LT(arma::norm(outside, "fro"), 1e-10);
    }
  }
}

TEST(Suppress, ReceiveFiltersStayInReceiveSpaces) {
  const NetworkConfig cfg =
      make_uniform_config(4, 1, 6, 3, 1, SymmetricTopology{1, 2, 1, 0});
  const ConnectivitySpec spec = build_symmetric_connectivity(cfg);
  const ChannelSet ch = sample_channels(spec, 11);
  const StreamAssignment d = uniform_streams(cfg, 1);
  SubspacePlan plan = make_full_structure_plan(cfg, d);
  // Shrink one receive space to check the constraint is honoured.
  plan.at(0, 0).receive =
      Subspace{arma::eye<arma::cx_mat>(3, 3).eval().head_cols(2).eval()};
  const auto [t, report] = suppress_inter_cell(ch, d, plan, {});
  const arma::cx_mat& u = t.u[0];
  ASSERT_EQ(u.n_cols, 1u);
  const arma::cx_mat proj = plan.at(0, 0).receive.projector();
  EXPECT_LT(arma::norm(u - proj * u, "fro"), 1e-10);
  EXPECT_LT(arma::norm(u.t() * u - arma::eye<arma::cx_mat>(1, 1), "fro"),
            1e-10);
  expect_monotone_trace(report.trace);
}

TEST(Suppress, SingleCellHasNothingToSuppress) {
  const NetworkConfig cfg = make_uniform_config(1, 2, 4, 2, 2);
  const ChannelSet ch = sample_channels(build_full_connectivity(cfg), 3);
  const StreamAssignment d = uniform_streams(cfg, 2);
  const SubspacePlan plan = make_full_structure_plan(cfg, d);
  const auto [t, report] = suppress_inter_cell(ch, d, plan, {});
  EXPECT_TRUE(report.converged);
  EXPECT_EQ(report.iterations, 1);
  EXPECT_EQ(report.final_leakage, 0.0);
  // Without free directions the precoder is exactly the core basis.
  EXPECT_LT(arma::norm(t.v_int[0] - plan.at(0, 0).core.basis, "fro"), 1e-14);
}

TEST(Suppress, RejectsPlanDisagreeingWithStreams) {
  const ChannelSet ch = dense_channels(1);
  const StreamAssignment one = uniform_streams(ch.spec.cfg, 1);
  const StreamAssignment two = uniform_streams(ch.spec.cfg, 2);
  const SubspacePlan plan = make_full_structure_plan(ch.spec.cfg, one);
  EXPECT_THROW(suppress_inter_cell(ch, two, plan, {}), std::invalid_argument);
}

TEST(ZeroForce, SeparatesStreamsWithinEachCell) {
  const ChannelSet ch = dense_channels(19);
  const NetworkConfig& cfg = ch.spec.cfg;
  const StreamAssignment d = uniform_streams(cfg, 1);
  const SubspacePlan plan = make_full_structure_plan(cfg, d);
  SuppressOptions opts;
  opts.max_iters = 20000;
  opts.rel_tol = 1e-14;
  opts.abs_floor = 1e-16;
  auto [t, report] = suppress_inter_cell(ch, d, plan, opts);
  zero_force_intra_cell(ch, t);
  EXPECT_TRUE(t.zf_rank_ok);
  for (int n = 0; n < cfg.num_bs; ++n) {
    // Basis of the cell's aggregate intermediate span: the final precoders
    // may rotate within it but never leave it.
    arma::cx_mat vagg(5, 0);
    for (int j = 0; j < cfg.ms_per_bs; ++j) {
      vagg = arma::join_rows(
          vagg, t.v_int[static_cast<std::size_t>(cfg.ms_index(n, j))]);
    }
    const arma::cx_mat pspan = column_space(vagg).projector();
    for (int q = 0; q < cfg.ms_per_bs; ++q) {
      const arma::cx_mat& vq =
          t.v[static_cast<std::size_t>(cfg.ms_index(n, q))];
      EXPECT_LT(arma::norm(vq - pspan * vq, "fro"), 1e-9);
      EXPECT_LT(arma::norm(vq.t() * vq - arma::eye<arma::cx_mat>(1, 1),
                           "fro"),
                1e-10);
      for (int j = 0; j < cfg.ms_per_bs; ++j) {
        const arma::cx_mat block =
            t.u[static_cast<std::size_t>(cfg.ms_index(n, j))].t() *
            ch.channel(n, j, n) * vq;
        if (j == q) {
          arma::vec sv;
          ASSERT_TRUE(arma::svd(sv, block));
          EXPECT_GT(sv.min(), 1e-6);  // own streams stay decodable
        } else {
          EXPECT_LT(arma::norm(block, "fro"), 1e-9);
        }
      }
    }
  }
}

TEST(ZeroForce, KeepsInterCellAlignmentIntact) {
  const ChannelSet ch = dense_channels(23);
  const NetworkConfig& cfg = ch.spec.cfg;
  const StreamAssignment d = uniform_streams(cfg, 1);
  const SubspacePlan plan = make_full_structure_plan(cfg, d);
  SuppressOptions opts;
  opts.max_iters = 20000;
  opts.rel_tol = 1e-14;
  opts.abs_floor = 1e-16;
  auto [t, report] = suppress_inter_cell(ch, d, plan, opts);
  ASSERT_LT(report.final_leakage, 1e-9);
  zero_force_intra_cell(ch, t);
  double leak = 0.0;
  for (int g = 0; g < cfg.num_bs; ++g) {
    for (int k = 0; k < cfg.ms_per_bs; ++k) {
      for (int n = 0; n < cfg.num_bs; ++n) {
        if (n == g) continue;
        for (int j = 0; j < cfg.ms_per_bs; ++j) {
          leak += arma::accu(arma::square(arma::abs(
              t.u[static_cast<std::size_t>(cfg.ms_index(g, k))].t() *
              ch.channel(g, k, n) *
              t.v[static_cast<std::size_t>(cfg.ms_index(n, j))])));
        }
      }
    }
  }
  EXPECT_LT(leak, 1e-8);
}

TEST(NaiveIteration, TraceIsMonotoneAndUsesRequestedStreams) {
  const ChannelSet ch = dense_channels(5);
  SuppressOptions opts;
  opts.max_iters = 200;
  const auto [t, report] = naive_iteration(ch, opts);
  EXPECT_EQ(t.d.total(), 6);
  expect_monotone_trace(report.trace);
  EXPECT_LT(report.trace.back(), report.trace.front());
  for (const arma::cx_mat& v : t.v) {
    EXPECT_LT(
        arma::norm(v.t() * v - arma::eye<arma::cx_mat>(v.n_cols, v.n_cols),
                   "fro"),
        1e-10);
  }
}

TEST(NaiveIteration, IsDeterministicPerSeed) {
  const ChannelSet ch = dense_channels(5);
  SuppressOptions opts;
  opts.max_iters = 40;
  opts.seed = 9;
  const auto [ta, ra] = naive_iteration(ch, opts);
  const auto [tb, rb] = naive_iteration(ch, opts);
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    EXPECT_EQ(ra.trace[i], rb.trace[i]);
  }
  for (std::size_t i = 0; i < ta.v.size(); ++i) {
    EXPECT_LT(arma::norm(ta.v[i] - tb.v[i], "fro"), 1e-14);
  }
}

TEST(Suppress, ZeroStreamUsersAreCarriedAsEmptyMatrices) {
  const NetworkConfig cfg = make_uniform_config(2, 2, 4, 2, 1);
  const ChannelSet ch = sample_channels(build_full_connectivity(cfg), 13);
  StreamAssignment d = uniform_streams(cfg, 1);
  d.d(0, 1) = 0;
  SubspacePlan plan = make_full_structure_plan(cfg, d);
  const auto [t, report] = suppress_inter_cell(ch, d, plan, {});
  EXPECT_EQ(t.v_int[1].n_cols, 0u);
  EXPECT_EQ(t.u[1].n_cols, 0u);
  EXPECT_EQ(t.v_int[1].n_rows, 4u);
  expect_monotone_trace(report.trace);
}

}  // namespace
}  // namespace iacell
