// SPDX-License-Identifier: Apache-2.0
//
// End-to-end scheme execution. run_scheme takes a channel realisation and
// produces evaluation-ready transceivers for the proposed pipeline or any
// of the reference schemes, applying the same direct-link diagonalization
// to all of them so rate comparisons are apples to apples.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "iacell/allocator.hpp"
#include "iacell/evaluation.hpp"
#include "iacell/network.hpp"
#include "iacell/transceiver.hpp"

namespace iacell {

// The proposed three-stage pipeline and the reference schemes it is
// compared against in the experiments.
enum class Scheme { kProposed, kBl1, kBl2, kBl4, kBl5 };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kProposed: return "proposed";
    case Scheme::kBl1: return "bl1";
    case Scheme::kBl2: return "bl2";
    case Scheme::kBl4: return "bl4";
    case Scheme::kBl5: return "bl5";
  }
  throw std::invalid_argument("scheme_name: unknown scheme");
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "proposed") return Scheme::kProposed;
  if (name == "bl1") return Scheme::kBl1;
  if (name == "bl2") return Scheme::kBl2;
  if (name == "bl4") return Scheme::kBl4;
  if (name == "bl5") return Scheme::kBl5;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

struct SchemeResult {
  Scheme scheme = Scheme::kProposed;
  TransceiverSet transceivers;
  LeakageReport report;      // meaningful for proposed, bl1 and bl2
  bool round_robin = false;  // evaluate with the duty-cycled rate model
};

// Runs one scheme on one channel realisation. `seed` drives every random
// choice inside the design (free-precoder initialisation, isotropic
// precoders); the fading itself already lives in `ch`.
inline SchemeResult run_scheme(Scheme scheme, const ChannelSet& ch,
                               std::uint64_t seed,
                               const SuppressOptions& base_opts = {}) {
  SuppressOptions opts = base_opts;
  opts.seed = seed;
  SchemeResult out;
  out.scheme = scheme;
  switch (scheme) {
    case Scheme::kProposed: {
      const PartialAssignment pa = assign_greedy_partial(ch.spec);
      auto designed = suppress_inter_cell(ch, pa.d, pa.plan, opts);
      zero_force_intra_cell(ch, designed.first);
      out.transceivers = std::move(designed.first);
      out.report = std::move(designed.second);
      break;
    }
    case Scheme::kBl1: {
      auto designed = baseline_bl1(ch, opts);
      out.transceivers = std::move(designed.first);
      out.report = std::move(designed.second);
      break;
    }
    case Scheme::kBl2: {
      auto designed = naive_iteration(ch, opts);
      out.transceivers = std::move(designed.first);
      out.report = std::move(designed.second);
      break;
    }
    case Scheme::kBl4: {
      out.transceivers = baseline_bl4(ch);
      out.round_robin = true;
      break;
    }
    case Scheme::kBl5: {
      out.transceivers = baseline_bl5(ch, seed);
      break;
    }
  }
  diagonalize_direct_links(ch, out.transceivers);
  return out;
}

// Rate sample for a finished scheme at the given transmit power, using the
// rate model the scheme was designed for.
inline ThroughputSample evaluate_scheme(const ChannelSet& ch,
                                        const SchemeResult& result,
                                        double power) {
  return result.round_robin
             ? sum_throughput_round_robin(ch, result.transceivers, power)
             : sum_throughput(ch, result.transceivers, power);
}

}  // namespace iacell
