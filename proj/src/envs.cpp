#include "imitlab/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imitlab/solvers.hpp"

namespace imitlab {

namespace {

struct FamilyName {
  EnvFamily family;
  const char* kebab;
  const char* camel;
};

constexpr FamilyName kFamilies[] = {
    {EnvFamily::StandardImitation, "standard-imitation", "StandardImitation"},
    {EnvFamily::ResetCliff, "reset-cliff", "ResetCliff"},
    {EnvFamily::ExampleThreeState, "three-state", "ExampleThreeState"},
    {EnvFamily::ExampleTwoStateBandit, "two-state-bandit", "ExampleTwoStateBandit"},
    {EnvFamily::ExampleNonConvex, "nonconvex", "ExampleNonConvex"},
    {EnvFamily::ExampleSubsample, "subsample", "ExampleSubsample"},
    {EnvFamily::RandomDeterministic, "random-deterministic", "RandomDeterministic"},
    {EnvFamily::RandomStochastic, "random-stochastic", "RandomStochastic"},
};

/// Builds a flat [h][s][a][s'] transition vector from a per-step rule.
template <class Rule>
std::vector<double> build_transitions(int S, int A, int H, Rule rule) {
  std::vector<double> p(static_cast<std::size_t>(std::max(H - 1, 0)) * S * A * S, 0.0);
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double* row = p.data() + ((static_cast<std::size_t>(h) * S + s) * A + a) * S;
        rule(h, s, a, row);
      }
  return p;
}

/// Transitions of the three-state example for any horizon.
TransitionModel three_state_model(int H) {
  return TransitionModel(3, 2, H, build_transitions(3, 2, H, [](int, int s, int a, double* row) {
                           if (s < 2 && a == 0) {
                             row[0] = 0.5;
                             row[1] = 0.5;
                           } else {
                             row[2] = 1.0;
                           }
                         }));
}

Tensor3 cliff_rewards(int H, int S, int A, int num_good) {
  Tensor3 r(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < num_good; ++s) r(h, s, 0) = 1.0;
  return r;
}

Trajectory traj(std::vector<StateAction> steps) {
  Trajectory t;
  t.mask.assign(steps.size(), true);
  t.steps = std::move(steps);
  return t;
}

}  // namespace

std::string family_name(EnvFamily f) {
  for (const auto& n : kFamilies)
    if (n.family == f) return n.kebab;
  return "?";
}

EnvFamily family_from_name(const std::string& name) {
  for (const auto& n : kFamilies)
    if (name == n.kebab || name == n.camel) return n.family;
  throw std::invalid_argument("unknown environment family: " + name);
}

void EnvSpec::validate() const {
  const auto& p = params;
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("EnvSpec: " + msg);
  };
  switch (family) {
    case EnvFamily::StandardImitation:
    case EnvFamily::RandomDeterministic:
    case EnvFamily::RandomStochastic:
      need(p.num_states >= 1 && p.num_actions >= 1 && p.horizon >= 1, "sizes must be positive");
      need(p.rho.empty() || static_cast<int>(p.rho.size()) == p.num_states, "rho length must equal num_states");
      need(p.rho_mode.empty() || p.rho_mode == "uniform" || p.rho_mode == "random",
           "rho_mode must be uniform or random");
      break;
    case EnvFamily::ResetCliff:
      need(p.num_good >= 1 && p.num_bad >= 1, "Reset Cliff needs at least one good and one bad state");
      need(p.num_actions >= 2, "Reset Cliff needs at least two actions");
      need(p.horizon >= 1, "horizon must be positive");
      break;
    default:
      break;
  }
}

std::vector<double> random_simplex_point(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  double sum = 0.0;
  for (auto& v : x) {
    v = -std::log1p(-rng.uniform());
    sum += v;
  }
  if (sum <= 0.0) {
    std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
    return x;
  }
  for (auto& v : x) v /= sum;
  // Force an exact unit sum so the construction tolerance is met.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) rest -= x[i];
  x.back() = std::max(rest, 0.0);
  return x;
}

std::vector<double> missing_mass_extremal_rho(int num_states, std::size_t m) {
  if (num_states < 1) throw std::invalid_argument("missing_mass_extremal_rho: num_states must be positive");
  if (static_cast<std::size_t>(num_states) > m + 1)
    throw std::invalid_argument("missing_mass_extremal_rho: needs num_states <= m + 1");
  std::vector<double> rho(num_states, 1.0 / static_cast<double>(m + 1));
  rho[0] = 1.0 - static_cast<double>(num_states - 1) / static_cast<double>(m + 1);
  return rho;
}

EnvPair make_standard_imitation(int num_states, int num_actions, int horizon, const std::vector<double>& rho) {
  if (num_states < 1 || num_actions < 1 || horizon < 1)
    throw std::invalid_argument("make_standard_imitation: sizes must be positive");
  if (static_cast<int>(rho.size()) != num_states)
    throw std::invalid_argument("make_standard_imitation: rho length must equal num_states");
  check_distribution(rho, kConstructionTol, "make_standard_imitation: rho");
  const int S = num_states, A = num_actions, H = horizon;
  TransitionModel model(S, A, H, build_transitions(S, A, H, [](int, int s, int, double* row) { row[s] = 1.0; }));
  Tensor3 r(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) r(h, s, 0) = 1.0;
  return {TabularMDP(std::move(model), rho, std::move(r)), Policy::constant(H, S, A, 0)};
}

EnvPair make_reset_cliff(int num_good, int num_bad, int num_actions, int horizon, std::uint64_t seed) {
  EnvSpec spec{EnvFamily::ResetCliff, {}};
  spec.params.num_good = num_good;
  spec.params.num_bad = num_bad;
  spec.params.num_actions = num_actions;
  spec.params.horizon = horizon;
  spec.validate();
  const int G = num_good, B = num_bad, S = G + B, A = num_actions, H = horizon;
  Rng rng(seed);
  constexpr double kFloor = 1e-3;
  auto probs = build_transitions(S, A, H, [&](int, int s, int a, double* row) {
    if (s < G && a == 0) {
      auto x = random_simplex_point(G, rng);
      double sum = 0.0;
      for (auto& v : x) {
        v = std::max(v, kFloor);
        sum += v;
      }
      for (int i = 0; i < G; ++i) row[i] = x[i] / sum;
    } else {
      for (int i = G; i < S; ++i) row[i] = 1.0 / B;
    }
  });
  std::vector<double> rho(S, 0.0);
  for (int s = 0; s < G; ++s) rho[s] = 1.0 / G;
  TransitionModel model(S, A, H, std::move(probs), TransitionModel::Provenance::True, kConstructionTol);
  return {TabularMDP(std::move(model), std::move(rho), cliff_rewards(H, S, A, G)), Policy::constant(H, S, A, 0)};
}

EnvInstance make_example_three_state() {
  TabularMDP mdp(three_state_model(2), {0.5, 0.5, 0.0}, cliff_rewards(2, 3, 2, 2));
  TrajectoryDataset d;
  d.trajectories = {traj({{0, 0}, {0, 0}}), traj({{0, 0}, {1, 0}})};
  d.seed_provenance = "canned: three-state example";
  return {std::move(mdp), Policy::constant(2, 3, 2, 0), std::move(d), std::nullopt};
}

EnvInstance make_two_state_bandit() {
  auto pair = make_standard_imitation(2, 2, 1, {0.5, 0.5});
  Tensor3 est(1, 2, 2);
  est(0, 0, 0) = 0.4;
  est(0, 1, 0) = 0.6;
  return {std::move(pair.mdp), std::move(pair.expert), std::nullopt,
          DistributionEstimate(std::move(est), DistributionEstimate::Kind::MLE)};
}

EnvInstance make_nonconvex_example() {
  const int S = 5, A = 2, H = 2;
  TransitionModel model(S, A, H, build_transitions(S, A, H, [](int, int s, int a, double* row) {
                          if (s == 0)
                            row[a == 0 ? 1 : 2] = 1.0;
                          else
                            row[s] = 1.0;
                        }));
  Tensor3 r(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) r(h, s, 0) = 1.0;
  TabularMDP mdp(std::move(model), {1.0, 0.0, 0.0, 0.0, 0.0}, std::move(r));
  TrajectoryDataset d;
  d.trajectories = {traj({{0, 0}, {1, 0}})};
  d.seed_provenance = "canned: non-convexity example";
  return {std::move(mdp), Policy::constant(H, S, A, 0), std::move(d), std::nullopt};
}

EnvInstance make_subsample_example() {
  TabularMDP mdp(three_state_model(3), {0.5, 0.5, 0.0}, cliff_rewards(3, 3, 2, 2));
  TrajectoryDataset d;
  d.trajectories = {traj({{0, 0}, {0, 0}, {0, 0}}), traj({{0, 0}, {1, 0}, {1, 0}})};
  for (auto& t : d.trajectories) t.mask = {false, true, true};
  d.seed_provenance = "canned: subsampled three-state example";
  return {std::move(mdp), Policy::constant(3, 3, 2, 0), std::move(d), std::nullopt};
}

EnvPair make_random_mdp(int num_states, int num_actions, int horizon, bool deterministic, std::uint64_t seed,
                        const std::vector<double>& rho) {
  if (num_states < 1 || num_actions < 1 || horizon < 1)
    throw std::invalid_argument("make_random_mdp: sizes must be positive");
  const int S = num_states, A = num_actions, H = horizon;
  Rng rng(seed);
  Rng trans_rng = rng.split(0), reward_rng = rng.split(1), rho_rng = rng.split(2);
  auto probs = build_transitions(S, A, H, [&](int, int, int, double* row) {
    if (deterministic) {
      row[trans_rng.below(S)] = 1.0;
    } else {
      auto x = random_simplex_point(S, trans_rng);
      std::copy(x.begin(), x.end(), row);
    }
  });
  Tensor3 r(H, S, A);
  for (double& x : r.data()) x = reward_rng.uniform();
  std::vector<double> init = rho.empty() ? random_simplex_point(S, rho_rng) : rho;
  TabularMDP mdp(TransitionModel(S, A, H, std::move(probs)), std::move(init), std::move(r));
  Policy expert = value_iteration(mdp.model(), mdp.initial_dist(), mdp.rewards()).policy;
  return {std::move(mdp), std::move(expert)};
}

EnvInstance make_env(const EnvSpec& spec) {
  spec.validate();
  const auto& p = spec.params;
  auto rho_for = [&](bool random_default) {
    if (!p.rho.empty()) return p.rho;
    const bool random = p.rho_mode.empty() ? random_default : p.rho_mode == "random";
    if (!random) return std::vector<double>(p.num_states, 1.0 / p.num_states);
    Rng rng(derive_seed(p.seed, {0x72686f}));
    return random_simplex_point(p.num_states, rng);
  };
  switch (spec.family) {
    case EnvFamily::StandardImitation: {
      auto e = make_standard_imitation(p.num_states, p.num_actions, p.horizon, rho_for(false));
      return {std::move(e.mdp), std::move(e.expert), std::nullopt, std::nullopt};
    }
    case EnvFamily::ResetCliff: {
      auto e = make_reset_cliff(p.num_good, p.num_bad, p.num_actions, p.horizon, p.seed);
      return {std::move(e.mdp), std::move(e.expert), std::nullopt, std::nullopt};
    }
    case EnvFamily::ExampleThreeState: return make_example_three_state();
    case EnvFamily::ExampleTwoStateBandit: return make_two_state_bandit();
    case EnvFamily::ExampleNonConvex: return make_nonconvex_example();
    case EnvFamily::ExampleSubsample: return make_subsample_example();
    case EnvFamily::RandomDeterministic:
    case EnvFamily::RandomStochastic: {
      const bool det = spec.family == EnvFamily::RandomDeterministic;
      std::vector<double> rho = p.rho.empty() && p.rho_mode != "uniform" ? std::vector<double>{} : rho_for(true);
      auto e = make_random_mdp(p.num_states, p.num_actions, p.horizon, det, p.seed, rho);
      return {std::move(e.mdp), std::move(e.expert), std::nullopt, std::nullopt};
    }
  }
  throw std::logic_error("make_env: unhandled family");
}

ResetCliffReport validate_reset_cliff(const TabularMDP& mdp, const Policy& expert) {
  ResetCliffReport rep;
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  const auto& M = mdp.model();
  auto fail = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };
  auto at = [](int h, int s) { return " at (h=" + std::to_string(h) + ", s=" + std::to_string(s) + ")"; };

  if (expert.horizon() != H || expert.num_states() != S || expert.num_actions() != A) {
    fail("expert policy shape does not match the MDP");
    return rep;
  }
  std::vector<char> good(S, 0);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        if (mdp.reward(h, s, a) > 0.0) good[s] = 1;
  for (int s = 0; s < S; ++s) (good[s] ? rep.good_states : rep.bad_states).push_back(s);
  if (rep.good_states.empty()) fail("no state earns reward, so the good set is empty");
  if (rep.bad_states.empty()) fail("every state earns reward, so the bad set is empty");
  if (A < 2) fail("fewer than two actions, so there is no non-expert action");
  if (!rep.violations.empty()) return rep;

  // Expert action: one deterministic action shared by all good states.
  for (int h = 0; h < H && rep.violations.empty(); ++h)
    for (int s : rep.good_states) {
      auto a = expert.deterministic_action(h, s);
      if (!a) {
        fail("expert is not deterministic" + at(h, s));
        break;
      }
      if (rep.expert_action < 0) rep.expert_action = *a;
      if (*a != rep.expert_action) {
        fail("expert uses different actions on good states" + at(h, s));
        break;
      }
    }
  if (!rep.violations.empty()) return rep;
  const int a1 = rep.expert_action;

  constexpr double tol = kConstructionTol;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double want = good[s] && a == a1 ? 1.0 : 0.0;
        if (mdp.reward(h, s, a) != want)
          fail("reward " + std::to_string(mdp.reward(h, s, a)) + " for action " + std::to_string(a) + at(h, s) +
               ", expected " + std::to_string(want));
      }
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        auto row = M.next(h, s, a);
        double to_good = 0.0;
        for (int s2 : rep.good_states) to_good += row[s2];
        const std::string where = at(h, s) + " action " + std::to_string(a);
        if (good[s] && a == a1) {
          if (std::abs(to_good - 1.0) > tol) fail("expert action leaves the good set" + where);
          for (int s2 : rep.good_states)
            if (!(row[s2] > 0.0)) fail("good-to-good probability is zero toward s'=" + std::to_string(s2) + where);
        } else if (good[s]) {
          if (std::abs(to_good) > tol) fail("non-expert action does not fall into the bad set" + where);
        } else if (std::abs(to_good) > tol) {
          fail("bad state is not absorbing into the bad set" + where);
        }
      }
  for (int s : rep.bad_states)
    if (mdp.initial_dist()[s] > 0.0) fail("initial distribution puts mass on bad state " + std::to_string(s));
  rep.passed = rep.violations.empty();
  return rep;
}

}  // namespace imitlab
