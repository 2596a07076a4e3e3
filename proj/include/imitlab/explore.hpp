#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "imitlab/estimators.hpp"
#include "imitlab/mdp.hpp"
#include "imitlab/solvers.hpp"

namespace imitlab {

/// Runs one episode of `policy` in the environment. All randomness comes from
/// `seed`.
using EnvSampler = std::function<Trajectory(const Policy& policy, std::uint64_t seed)>;

EnvSampler env_sampler_for(const TabularMDP& mdp);

struct ExplorationStrategy {
  enum class Kind { OracleModel, UniformPolicy, CountGreedy };

  Kind kind = Kind::CountGreedy;
  /// CountGreedy reward is bonus_scale / sqrt(1 + count(h, s, a)).
  double bonus_scale = 1.0;
  /// OracleModel only: the true law and initial distribution.
  std::optional<TransitionModel> oracle_model;
  std::vector<double> oracle_rho;

  static ExplorationStrategy oracle(const TabularMDP& truth);
  static ExplorationStrategy uniform();
  static ExplorationStrategy count_greedy(double bonus_scale = 1.0);
  void validate() const;
};

const char* strategy_name(ExplorationStrategy::Kind kind);

struct ExplorationData {
  std::vector<TransitionSample> transitions;
  std::vector<int> initial_states;
  std::vector<Trajectory> episodes;
  /// Set by OracleModel: fit_model returns this law unchanged.
  std::optional<TransitionModel> oracle_model;
  std::vector<double> oracle_rho;
};

/// Collects n episodes (ignored for OracleModel).
ExplorationData collect(const EnvSampler& env_sampler, const ExplorationStrategy& strategy, std::size_t n,
                        ProblemDims dims, std::uint64_t seed);

TransitionModel fit_model(const ExplorationData& data, ProblemDims dims);
/// Empirical first-state distribution of the collected episodes.
std::vector<double> initial_dist_estimate(const ExplorationData& data, int num_states);

/// Visit counts n(h, s, a) over every collected step.
Tensor3 visit_counts(const ExplorationData& data, ProblemDims dims);

/// Minimum visit count over (h, s, a) with relevant[h][s] set.
double min_visit_count(const Tensor3& counts, const std::vector<std::vector<char>>& relevant);

/// Largest |V under truth - V under model| over random (policy, reward)
/// probes. A sampled lower estimate of the supremum over all probes.
double model_quality(const TransitionModel& model, const TabularMDP& truth, std::size_t probe_policies,
                     std::uint64_t seed);

}  // namespace imitlab
