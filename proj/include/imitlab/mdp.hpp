#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imitlab/rng.hpp"
#include "imitlab/tensor.hpp"

namespace imitlab {

/// Tolerance applied to probability vectors supplied by callers.
inline constexpr double kConstructionTol = 1e-12;
/// Tolerance applied to probability vectors produced by computation.
inline constexpr double kDerivedTol = 1e-10;

/// Throws std::invalid_argument unless `p` is nonnegative and sums to one
/// within `tol`. `what` prefixes the message.
void check_distribution(std::span<const double> p, double tol, const std::string& what);

/// Transition law p_h(s'|s,a) for h = 0..H-2. Steps are zero-based in code;
/// step H-1 has no outgoing transition.
class TransitionModel {
 public:
  enum class Provenance { True, Empirical };

  TransitionModel() = default;
  /// `probs` is laid out [h][s][a][s'] with (H-1)*S*A*S entries.
  TransitionModel(int num_states, int num_actions, int horizon, std::vector<double> probs,
                  Provenance provenance = Provenance::True, double tol = kConstructionTol);

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  int horizon() const { return H_; }
  Provenance provenance() const { return provenance_; }

  std::span<const double> next(int h, int s, int a) const {
    return {probs_.data() + ((static_cast<std::size_t>(h) * S_ + s) * A_ + a) * S_, static_cast<std::size_t>(S_)};
  }
  double p(int h, int s, int a, int s2) const { return next(h, s, a)[s2]; }
  const std::vector<double>& raw() const { return probs_; }

  bool is_deterministic() const;

 private:
  int S_ = 0, A_ = 0, H_ = 0;
  std::vector<double> probs_;
  Provenance provenance_ = Provenance::True;
};

/// Finite episodic MDP with rewards in [0, 1].
class TabularMDP {
 public:
  TabularMDP(TransitionModel transitions, std::vector<double> initial_dist, Tensor3 rewards);

  int num_states() const { return model_.num_states(); }
  int num_actions() const { return model_.num_actions(); }
  int horizon() const { return model_.horizon(); }
  const TransitionModel& model() const { return model_; }
  const std::vector<double>& initial_dist() const { return rho_; }
  const Tensor3& rewards() const { return rewards_; }
  double reward(int h, int s, int a) const { return rewards_(h, s, a); }

  /// Copy of this MDP with a different initial distribution.
  TabularMDP with_initial_dist(std::vector<double> rho) const;

 private:
  TransitionModel model_;
  std::vector<double> rho_;
  Tensor3 rewards_;
};

/// Non-stationary stochastic policy pi_h(a|s), stored as (h, s, a).
class Policy {
 public:
  Policy() = default;
  explicit Policy(Tensor3 probs, double tol = kConstructionTol);

  static Policy uniform(int horizon, int num_states, int num_actions);
  /// actions[h][s] is the action taken at (h, s).
  static Policy deterministic(const std::vector<std::vector<int>>& actions, int num_actions);
  /// Same action everywhere.
  static Policy constant(int horizon, int num_states, int num_actions, int action);

  int horizon() const { return static_cast<int>(probs_.dim0()); }
  int num_states() const { return static_cast<int>(probs_.dim1()); }
  int num_actions() const { return static_cast<int>(probs_.dim2()); }
  double prob(int h, int s, int a) const { return probs_(h, s, a); }
  std::span<const double> row(int h, int s) const { return probs_.row(h, s); }
  const Tensor3& probs() const { return probs_; }

  /// The action of a one-hot row, if the row is one-hot.
  std::optional<int> deterministic_action(int h, int s) const;

  bool operator==(const Policy&) const = default;

 private:
  Tensor3 probs_;
};

/// Exact per-step state-action visitation distribution.
class OccupancyMeasure {
 public:
  explicit OccupancyMeasure(Tensor3 dist, double tol = kDerivedTol);
  const Tensor3& dist() const { return dist_; }
  double operator()(int h, int s, int a) const { return dist_(h, s, a); }

 private:
  Tensor3 dist_;
};

struct StateAction {
  int state;
  int action;
  bool operator==(const StateAction&) const = default;
};

struct Trajectory {
  std::vector<StateAction> steps;
  /// true means the step is observed. Empty is read as all observed.
  std::vector<bool> mask;

  std::size_t length() const { return steps.size(); }
  bool observed(std::size_t h) const { return mask.empty() || mask[h]; }
  bool operator==(const Trajectory&) const = default;
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  std::string seed_provenance;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
  int horizon() const { return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().length()); }
  bool fully_observed() const;
  /// Throws unless all trajectories share one horizon and one mask pattern
  /// and indices are in range. Pass negative sizes to skip the range check.
  void validate(int num_states = -1, int num_actions = -1) const;

  bool operator==(const TrajectoryDataset&) const = default;
};

/// Forward recursion on an arbitrary transition law.
Tensor3 occupancy_tensor(const TransitionModel& model, std::span<const double> rho, const Policy& pi);
OccupancyMeasure compute_occupancy(const TabularMDP& mdp, const Policy& pi);

/// Backward Bellman evaluation, independent of compute_occupancy.
double policy_value(const TabularMDP& mdp, const Policy& pi);
/// Same, for an arbitrary reward tensor under a transition law.
double evaluate_policy(const TransitionModel& model, std::span<const double> rho, const Tensor3& reward,
                       const Policy& pi);
double value_gap(const TabularMDP& mdp, const Policy& expert, const Policy& learner);

Trajectory sample_trajectory(const TabularMDP& mdp, const Policy& pi, Rng& rng);
TrajectoryDataset sample_trajectories(const TabularMDP& mdp, const Policy& pi, std::size_t m, std::uint64_t seed);

struct L1Distance {
  std::vector<double> per_h;
  double total = 0.0;
};
L1Distance l1_distance(const Tensor3& a, const Tensor3& b);

StateDist state_marginal(const Tensor3& occ);

/// reachable[h][s] is set iff some policy reaches s at step h with positive
/// probability.
std::vector<std::vector<char>> reachable_states(const TransitionModel& model, std::span<const double> rho);

/// Sum over (h, s, a) of x * y.
double inner(const Tensor3& x, const Tensor3& y);

}  // namespace imitlab
