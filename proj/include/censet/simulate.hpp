#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "censet/minimax.hpp"

namespace censet {

struct GaussianIid {
  double mean = 0.0;
  double sd = 1.0;
};

/// logits = log of a symmetric Dirichlet draw.
struct DirichletSoftmax {
  double concentration = 1.0;
};

/// `head_size` tokens share probability 1 / (1 + exp(-gap)); the remaining
/// tokens carry the rest with jittered logits.
struct PeakedHead {
  std::size_t head_size = 1;
  double gap = 10.0;
};

using LogitLaw = std::variant<GaussianIid, DirichletSoftmax, PeakedHead>;

struct SyntheticTeacherConfig {
  std::size_t vocab_size = 0;
  LogitLaw law = GaussianIid{};
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

/// Deterministic in (config, position index); logits already divided by the
/// temperature.
std::vector<std::vector<double>> generate_teacher(const SyntheticTeacherConfig& config,
                                                  std::size_t n_positions);

/// Reveals the K largest logits, ties going to the lower token id. Under
/// NormalizedLogProbs the scores are log-softmax values.
TopKObservation censor(std::span<const double> logits, std::size_t k, AccessMode mode,
                       std::string position_id = {});

struct SweepRow {
  std::size_t k = 0;
  double uk_mean = 0.0;
  double uk_sd = 0.0;  // population sd
  double rbin_mean = 0.0;
  double tail_mass_mean = 0.0;
  std::size_t n = 0;
  bool skipped = false;  // K exceeded V for some position
};

std::vector<SweepRow> ksweep(std::span<const std::vector<double>> positions,
                             std::span<const std::size_t> ks);

struct CompositionResult {
  double average_upper = 0.0;  // mean worst-case risk of the supplied estimators
  double average_lower = 0.0;  // mean R_bin
  std::vector<double> per_position_upper;
  std::vector<double> per_position_lower;
  double joint_grid_sup = 0.0;
  double factored_grid_sum = 0.0;
  std::size_t joint_grid_nodes = 0;
};

/// Per-position risk bracket averaged across positions, plus a brute joint
/// adversary over the product of per-position tail-mass grids.
CompositionResult compose_nonadaptive(std::span<const SetGeometry> geoms,
                                      std::span<const EstimatorSpec> estimators,
                                      std::size_t t_grid = 1000,
                                      std::size_t joint_budget = 2000000);

}  // namespace censet
