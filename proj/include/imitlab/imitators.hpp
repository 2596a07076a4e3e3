#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "imitlab/envs.hpp"
#include "imitlab/estimators.hpp"
#include "imitlab/explore.hpp"
#include "imitlab/mdp.hpp"
#include "imitlab/solvers.hpp"

namespace imitlab {

/// sum_h || P^pi_h - est_h ||_1.
double vail_objective(const TransitionModel& model, std::span<const double> rho, const Policy& pi, const Tensor3& est);
double vail_objective(const TabularMDP& mdp, const Policy& pi, const DistributionEstimate& est);

/// Recorded action on every covered (h, s), uniform elsewhere. Throws on
/// conflicting actions.
Policy bc(const TrajectoryDataset& data, int num_states, int num_actions, int horizon);

/// Range of optimal pi_h(a_ref|s). `reached` is false when (h, s) carries no
/// mass under any optimal point, in which case the row is unconstrained.
struct ActionInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool reached = true;
};

struct VailSolution {
  Policy policy;
  double objective_value = 0.0;
  /// Indexed [h][s].
  std::vector<std::vector<ActionInterval>> optimal_set;
  std::uint64_t sampling_seed = 0;
  /// Brute force only: grid points attaining the minimum, and the
  /// resolution * 2H|S||A| bound on the distance to the continuous optimum.
  double optimal_point_count = 0.0;
  double lipschitz_slack = 0.0;
};

struct BruteforceOptions {
  double resolution = 0.01;
  /// Action whose probability the interval descriptor tracks, per (h, s).
  /// Empty means action 0 everywhere.
  std::vector<std::vector<int>> reference_action;
  /// Rows held fixed during the search: fixed_mask[h][s] selects rows of
  /// fixed_rows. Empty means none.
  std::vector<std::vector<char>> fixed_mask;
  std::optional<Policy> fixed_rows;
  /// Objective values within this of the minimum count as optimal.
  double tie_tol = 1e-9;
  /// Cap on coupled grid dimensions, sum of (|A| - 1) over coupled rows.
  int max_coupled_dims = 8;
  double max_configurations = 5e8;
};

/// Exact minimum of the VAIL objective over a simplex grid. Rows that cannot
/// influence later steps (last step, unreachable, or identical transition
/// rows) are minimized independently, which keeps the result an exact grid
/// minimum while only the coupled rows are enumerated jointly.
VailSolution vail_bruteforce(const TransitionModel& model, std::span<const double> rho, const Tensor3& est,
                             const BruteforceOptions& options);
VailSolution vail_bruteforce(const TabularMDP& mdp, const Tensor3& est, double resolution);

/// Closed-form optimal set on Standard Imitation, with a policy sampled
/// uniformly from it.
VailSolution vail_standard_imitation_exact(const Tensor3& est, std::span<const double> rho, std::uint64_t seed);

/// Policy with pi_h(a_ref|s) = lo + t (hi - lo) and the remaining mass spread
/// evenly over the other actions. t = 0 is the worst member on Standard
/// Imitation, t = 0.5 the midpoint.
Policy interval_policy(const std::vector<std::vector<ActionInterval>>& intervals, int num_actions, double t,
                       int reference_action = 0);

struct TailOptions {
  int iterations = 1000;
  /// Step size for iteration t (1-based) of T. Empty means sqrt(|S||A|/(8T)).
  std::function<double(int t, int T)> eta;
  std::optional<RewardWeights> w_init;
  bool keep_trace = true;
};

struct TailResult {
  Policy policy;
  Tensor3 mean_occupancy;
  std::vector<TraceEntry> trace;
  /// max_t of the dual lower bound on min_pi f(pi).
  double best_dual_value = 0.0;
  /// Empirical average regret of the reward player.
  double empirical_regret = 0.0;
  double regret_bound = 0.0;
  /// Exact value iteration is the inner solver.
  double eps_opt = 0.0;
};

double default_eta(int num_states, int num_actions, int T);

TailResult tail(const TransitionModel& model, std::span<const double> rho, const Tensor3& est,
                const TailOptions& options);

/// Row-normalizes over actions; zero rows become uniform.
Policy mean_occupancy_policy(const Tensor3& pbar);

struct MbTailDiagnostics {
  DistributionEstimate estimate;
  TransitionModel model;
  std::vector<double> rho_hat;
  std::size_t transitions_collected = 0;
  /// Minimum visit count over (h, s, a) cells seen at least once.
  double min_visit_count = 0.0;
  /// Per-step mass of the estimate; deviation from 1 is an error proxy.
  std::vector<double> estimate_mass;
  /// Fraction of D1c trajectories that stay covered through the last step.
  double covered_fraction = 0.0;
  double objective_under_model = 0.0;
  double best_dual_value = 0.0;
  double empirical_regret = 0.0;
  double regret_bound = 0.0;
};

struct MbTailResult {
  Policy policy;
  MbTailDiagnostics diagnostics;
};

/// Seed used by stage `stage` of mb_tail: 0 estimate, 1 exploration.
std::uint64_t mb_tail_stage_seed(std::uint64_t seed, std::uint64_t stage);

MbTailResult mb_tail(const EnvSampler& env_sampler, const TrajectoryDataset& data, ProblemDims dims, std::size_t n,
                     std::size_t n_prime, int T, const ExplorationStrategy& exploration, std::uint64_t seed);

/// Rollout sampler that draws whole episodes through an EnvSampler.
RolloutSampler rollout_sampler_from(const EnvSampler& env_sampler);

struct Certificate {
  double c_pi = 0.0;
  double lhs = 0.0;
  double eps_ail = 0.0;
  bool satisfied = false;
  std::vector<int> last_step_set;
};

/// Approximate-optimality condition on Reset Cliff. The expert action and the
/// good set are read from the rewards.
Certificate approx_optimality_certificate(const TabularMDP& mdp, const Policy& pibar, const Tensor3& est,
                                          double eps_ail);

struct BcReductionCheck {
  bool passed = false;
  double bc_objective = 0.0;
  double grid_minimum = 0.0;
};

/// On a deterministic MDP with one expert trajectory, checks that BC attains
/// the grid minimum of the VAIL objective over policies that are uniform off
/// the trajectory's support.
BcReductionCheck verify_bc_is_ail_optimum(const TabularMDP& mdp, const TrajectoryDataset& single_traj,
                                          double resolution = 0.01);

}  // namespace imitlab
