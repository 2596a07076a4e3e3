#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imitlab/estimators.hpp"
#include "imitlab/mdp.hpp"

namespace imitlab {

enum class EnvFamily {
  StandardImitation,
  ResetCliff,
  ExampleThreeState,
  ExampleTwoStateBandit,
  ExampleNonConvex,
  ExampleSubsample,
  RandomDeterministic,
  RandomStochastic,
};

/// Kebab-case name used on the command line and in CSV output.
std::string family_name(EnvFamily f);
/// Accepts the kebab-case name or the enumerator spelling.
EnvFamily family_from_name(const std::string& name);

struct EnvParams {
  int num_states = 2;
  int num_actions = 2;
  int horizon = 2;
  int num_good = 2;
  int num_bad = 1;
  std::uint64_t seed = 0;
  /// Explicit initial distribution; empty means the family default.
  std::vector<double> rho;
  /// "uniform" or "random"; empty means the family default (uniform for
  /// Standard Imitation, random for the random families).
  std::string rho_mode;
};

struct EnvSpec {
  EnvFamily family = EnvFamily::StandardImitation;
  EnvParams params;
  /// Throws std::invalid_argument if params do not fit the family.
  void validate() const;
};

struct EnvPair {
  TabularMDP mdp;
  Policy expert;
};

struct EnvInstance {
  TabularMDP mdp;
  Policy expert;
  std::optional<TrajectoryDataset> dataset;
  std::optional<DistributionEstimate> estimate;
};

EnvInstance make_env(const EnvSpec& spec);

/// Every state absorbs under every action; reward 1 iff a = 0.
EnvPair make_standard_imitation(int num_states, int num_actions, int horizon, const std::vector<double>& rho);
/// States 0..num_good-1 are good, the rest bad; the expert action is 0.
EnvPair make_reset_cliff(int num_good, int num_bad, int num_actions, int horizon, std::uint64_t seed);
EnvInstance make_example_three_state();
EnvInstance make_two_state_bandit();
EnvInstance make_nonconvex_example();
/// The three-state dynamics with H = 3 and the first step masked.
EnvInstance make_subsample_example();
/// Random rewards in [0, 1]; the expert is optimal by value iteration.
/// `rho` overrides the random initial distribution when non-empty.
EnvPair make_random_mdp(int num_states, int num_actions, int horizon, bool deterministic, std::uint64_t seed,
                        const std::vector<double>& rho = {});

/// Initial distribution where states 1..S-1 each get 1/(m+1), the value that
/// maximizes rho(s)(1-rho(s))^m, and state 0 takes the rest. Needs S <= m+1.
std::vector<double> missing_mass_extremal_rho(int num_states, std::size_t m);

/// Dirichlet(1, ..., 1) draw.
std::vector<double> random_simplex_point(std::size_t n, Rng& rng);

struct ResetCliffReport {
  bool passed = false;
  std::vector<std::string> violations;
  std::vector<int> good_states;
  std::vector<int> bad_states;
  int expert_action = -1;
};

/// Checks the Reset Cliff structure: partition, reward placement, good-state
/// transitions under the expert action, the bad set absorbing, strict
/// positivity of good-to-good rows, and an initial distribution on good states.
ResetCliffReport validate_reset_cliff(const TabularMDP& mdp, const Policy& expert);

}  // namespace imitlab
