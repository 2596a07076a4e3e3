#pragma once

#include <span>
#include <vector>

#include "imitlab/mdp.hpp"

namespace imitlab {

/// Reward weights w(h, s, a) in the unit l-infinity ball.
class RewardWeights {
 public:
  explicit RewardWeights(Tensor3 w);
  static RewardWeights zeros(int horizon, int num_states, int num_actions);
  const Tensor3& values() const { return w_; }

 private:
  Tensor3 w_;
};

struct PlanResult {
  Policy policy;
  double value = 0.0;
};

/// Exact finite-horizon planning for an arbitrary real reward tensor.
/// Ties go to the lowest action index.
PlanResult value_iteration(const TransitionModel& model, std::span<const double> rho, const Tensor3& reward);
PlanResult value_iteration(const TransitionModel& model, std::span<const double> rho, const RewardWeights& w);

/// Coordinate-wise clamp to [-1, 1].
RewardWeights project_linf(const Tensor3& w);
RewardWeights ogd_update(const RewardWeights& w, const Tensor3& grad, double eta);

/// f(w) = sum w * (occupancy - est); its gradient in w is occupancy - est.
double linear_loss(const Tensor3& w, const Tensor3& occupancy, const Tensor3& est);

/// One TAIL iteration as seen by the reward player.
struct TraceEntry {
  Tensor3 w;
  Tensor3 occupancy;
  double best_response_value = 0.0;
  /// Lower bound w.est - max_pi w.P^pi on the VAIL optimum.
  double dual_value = 0.0;
};

struct RegretAudit {
  double empirical_regret = 0.0;
  double bound = 0.0;
  bool within_bound = false;
};

/// Average regret of the w-sequence against the best fixed w in hindsight,
/// next to 2H sqrt(2|S||A|/T).
RegretAudit regret_audit(std::span<const TraceEntry> trace, const Tensor3& est);

struct TransitionSample {
  int step;
  int state;
  int action;
  int next_state;
};

/// Empirical next-state frequencies; unvisited (h, s, a) rows are uniform.
TransitionModel fit_empirical_model(std::span<const TransitionSample> samples, int num_states, int num_actions,
                                    int horizon);

/// All (h, s_h, a_h, s_{h+1}) transitions contained in the observed steps.
std::vector<TransitionSample> transitions_of(const TrajectoryDataset& data);

}  // namespace imitlab
