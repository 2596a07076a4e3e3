#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "imitlab/mdp.hpp"

namespace imitlab {

/// Per-step states visited in D1, with the expert action recorded there.
class CoverageSets {
 public:
  CoverageSets() = default;
  CoverageSets(int horizon, int num_states);
  /// Builds coverage from every observed step of `data`.
  static CoverageSets from_dataset(const TrajectoryDataset& data, int num_states);

  int horizon() const { return static_cast<int>(action_.size()); }
  int num_states() const { return action_.empty() ? 0 : static_cast<int>(action_.front().size()); }
  bool contains(int h, int s) const { return action_[h][s] != kUncovered; }
  /// True if two different actions were recorded at (h, s).
  bool conflicting(int h, int s) const { return action_[h][s] == kConflict; }
  bool has_conflict() const;
  /// Expert action at a covered, non-conflicting (h, s).
  int expert_action(int h, int s) const;
  std::vector<int> states(int h) const;

  void record(int h, int s, int a);

 private:
  static constexpr int kUncovered = -1;
  static constexpr int kConflict = -2;
  std::vector<std::vector<int>> action_;
};

struct SplitRecord {
  std::vector<std::size_t> d1_indices;
  std::vector<std::size_t> d1c_indices;
  CoverageSets coverage;
};

class DistributionEstimate {
 public:
  enum class Kind { MLE, MaskedMLE, MimicMD, MimicMDModelBased };

  DistributionEstimate(Tensor3 dist, Kind kind, std::optional<SplitRecord> split = std::nullopt);

  const Tensor3& dist() const { return dist_; }
  Kind kind() const { return kind_; }
  const std::optional<SplitRecord>& split_record() const { return split_; }
  /// Per-step state marginal sum_a est_h(s, a).
  StateDist state_marginal() const { return imitlab::state_marginal(dist_); }

 private:
  Tensor3 dist_;
  Kind kind_;
  std::optional<SplitRecord> split_;
};

const char* kind_name(DistributionEstimate::Kind kind);
DistributionEstimate::Kind kind_from_name(const std::string& name);

DistributionEstimate mle_estimate(const TrajectoryDataset& data, int num_states, int num_actions);
/// Masked steps are filled with 1/(|S||A|).
DistributionEstimate masked_mle_estimate(const TrajectoryDataset& data, int num_states, int num_actions);

struct DatasetSplit {
  TrajectoryDataset d1;
  TrajectoryDataset d1c;
  CoverageSets coverage;
  std::vector<std::size_t> d1_indices;
  std::vector<std::size_t> d1c_indices;
};

/// Random halves with |D1| = floor(m/2); coverage is computed from D1.
DatasetSplit split_dataset(const TrajectoryDataset& data, int num_states, std::uint64_t seed);

/// True iff the states s_0..s_h of `traj` are all covered at their steps.
bool prefix_covered(const Trajectory& traj, const CoverageSets& cov, int h);

/// Exact expert mass on covered-prefix trajectories, by forward recursion.
Tensor3 mimic_md_first_term(const TransitionModel& model, std::span<const double> rho, const CoverageSets& cov,
                            int num_actions);
/// Empirical frequency over `d1c` of pairs whose state prefix leaves coverage.
Tensor3 mimic_md_second_term(const TrajectoryDataset& d1c, const CoverageSets& cov, int num_states, int num_actions);

DistributionEstimate mimic_md_estimate(const TrajectoryDataset& data, const TabularMDP& mdp, std::uint64_t seed);

/// Returns n trajectories of `policy` in the environment; the callback owns
/// the randomness given `seed`.
using RolloutSampler = std::function<TrajectoryDataset(const Policy& policy, std::size_t n, std::uint64_t seed)>;

struct ProblemDims {
  int num_states;
  int num_actions;
  int horizon;
};

/// BC policy of D1: the recorded action on covered states, uniform elsewhere.
Policy bc_from_coverage(const CoverageSets& cov, int num_actions);

DistributionEstimate mimic_md_estimate_model_based(const TrajectoryDataset& data, ProblemDims dims,
                                                   const RolloutSampler& rollout_sampler, std::size_t n_prime,
                                                   std::uint64_t seed);

/// Initial-state probability mass that never appears in `step1_states`.
double missing_mass(std::span<const int> step1_states, std::span<const double> rho);

}  // namespace imitlab
