#include <doctest.h>

#include <cmath>

#include "imitlab/envs.hpp"
#include "imitlab/estimators.hpp"
#include "imitlab/imitators.hpp"
#include "oracles.hpp"

using namespace imitlab;

namespace {

Policy random_policy(int H, int S, int A, Rng& rng) {
  Tensor3 p(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      const auto x = random_simplex_point(A, rng);
      for (int a = 0; a < A; ++a) p(h, s, a) = x[a];
    }
  return Policy(std::move(p));
}

/// All deterministic policies of a small MDP, as action tables.
std::vector<Policy> all_deterministic(int H, int S, int A) {
  std::vector<Policy> out;
  const int cells = H * S;
  std::vector<int> idx(cells, 0);
  while (true) {
    std::vector<std::vector<int>> acts(H, std::vector<int>(S));
    for (int c = 0; c < cells; ++c) acts[c / S][c % S] = idx[c];
    out.push_back(Policy::deterministic(acts, A));
    int d = 0;
    while (d < cells && ++idx[d] == A) idx[d++] = 0;
    if (d == cells) break;
  }
  return out;
}

}  // namespace

TEST_CASE("Standard Imitation: state marginal equals rho for any policy") {
  Rng rng(1);
  const std::vector<double> rho = {0.2, 0.3, 0.5};
  const auto e = make_standard_imitation(3, 2, 4, rho);
  for (int i = 0; i < 50; ++i) {
    const auto m = state_marginal(compute_occupancy(e.mdp, random_policy(4, 3, 2, rng)).dist());
    for (int h = 0; h < 4; ++h)
      for (int s = 0; s < 3; ++s) CHECK(std::abs(m[h][s] - rho[s]) <= 1e-12);
  }
  CHECK(policy_value(e.mdp, e.expert) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS(make_standard_imitation(2, 2, 2, {0.7, 0.7}));
}

TEST_CASE("Standard Imitation: expert is the unique maximizer among deterministic policies") {
  const auto e = make_standard_imitation(2, 2, 2, {0.5, 0.5});
  const double v_e = oracle::value(e.mdp, e.expert);
  int ties = 0;
  for (const auto& pi : all_deterministic(2, 2, 2)) {
    const double v = oracle::value(e.mdp, pi);
    CHECK(v <= v_e + 1e-12);
    if (std::abs(v - v_e) <= 1e-12) ++ties;
  }
  CHECK(ties == 1);
}

TEST_CASE("Reset Cliff: structure, expert value and absorbing bad set") {
  const auto rc = make_reset_cliff(3, 2, 3, 5, 2);
  CHECK(policy_value(rc.mdp, rc.expert) == doctest::Approx(5.0).epsilon(1e-12));
  const Tensor3 occ = compute_occupancy(rc.mdp, rc.expert).dist();
  for (int h = 0; h < 5; ++h)
    for (int s = 3; s < 5; ++s)
      for (int a = 0; a < 3; ++a) CHECK(occ(h, s, a) == 0.0);

  // Taking a non-expert action at step h ends all reward from h + 1 on.
  for (int h = 0; h < 4; ++h) {
    Tensor3 p = rc.expert.probs();
    for (int s = 0; s < 5; ++s) {
      p(h, s, 0) = 0.0;
      p(h, s, 1) = 1.0;
    }
    const Tensor3 o = compute_occupancy(rc.mdp, Policy(std::move(p))).dist();
    for (int k = h + 1; k < 5; ++k) {
      double r = 0.0;
      for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 3; ++a) r += o(k, s, a) * rc.mdp.rewards()(k, s, a);
      CHECK(r == 0.0);
    }
  }
  CHECK_THROWS(make_reset_cliff(0, 1, 2, 3, 0));
  CHECK_THROWS(make_reset_cliff(2, 0, 2, 3, 0));
  CHECK_THROWS(make_reset_cliff(2, 1, 1, 3, 0));
}

TEST_CASE("validator accepts generated Reset Cliffs and rejects mutations") {
  for (int seed = 0; seed < 100; ++seed) {
    const auto rc = make_reset_cliff(1 + seed % 4, 1 + seed % 3, 2 + seed % 2, 1 + seed % 5, seed);
    const auto rep = validate_reset_cliff(rc.mdp, rc.expert);
    CHECK_MESSAGE(rep.passed, "seed " << seed);
    CHECK(rep.expert_action == 0);
  }
  const auto si = make_standard_imitation(3, 2, 3, {0.2, 0.3, 0.5});
  CHECK_FALSE(validate_reset_cliff(si.mdp, si.expert).passed);

  // One good-to-good entry set to zero, its mass moved to another good state.
  const auto rc = make_reset_cliff(3, 1, 2, 3, 4);
  std::vector<double> raw = rc.mdp.model().raw();
  const int S = 4, A = 2;
  auto at = [&](int h, int s, int a, int s2) -> double& { return raw[((h * S + s) * A + a) * S + s2]; };
  at(1, 0, 0, 1) += at(1, 0, 0, 2);
  at(1, 0, 0, 2) = 0.0;
  const TabularMDP mutated(TransitionModel(S, A, 3, raw), rc.mdp.initial_dist(), rc.mdp.rewards());
  const auto rep = validate_reset_cliff(mutated, rc.expert);
  CHECK_FALSE(rep.passed);
  CHECK_FALSE(rep.violations.empty());
}

TEST_CASE("three-state example reproduces its empirical table") {
  const auto inst = make_example_three_state();
  const Tensor3 e = mle_estimate(*inst.dataset, 3, 2).dist();
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) {
        double want = 0.0;
        if (h == 0 && s == 0 && a == 0) want = 1.0;
        if (h == 1 && s < 2 && a == 0) want = 0.5;
        CHECK(e(h, s, a) == want);
      }
  CHECK(policy_value(inst.mdp, inst.expert) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("three-state example: grid optimum at resolution 0.01 is the all-ones policy") {
  const auto inst = make_example_three_state();
  const auto sol = vail_bruteforce(inst.mdp, mle_estimate(*inst.dataset, 3, 2).dist(), 0.01);
  CHECK(sol.optimal_point_count == 1.0);
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 2; ++s) CHECK(sol.policy.prob(h, s, 0) == 1.0);
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-state bandit canned estimate") {
  const auto b = make_two_state_bandit();
  REQUIRE(b.estimate);
  const Tensor3& e = b.estimate->dist();
  CHECK(e(0, 0, 0) == 0.4);
  CHECK(e(0, 1, 0) == 0.6);
  double mass = 0.0;
  for (double x : e.slice(0)) mass += x;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("non-convex example: objective formula at reference points") {
  const auto inst = make_nonconvex_example();
  const Tensor3 est = mle_estimate(*inst.dataset, 5, 2).dist();
  auto f = [&](double x, double y) {
    std::vector<std::vector<double>> p(2, std::vector<double>(5, 1.0));
    p[0][0] = x;
    p[1][1] = y;
    return vail_objective(inst.mdp.model(), inst.mdp.initial_dist(), oracle::two_action_policy(p), est);
  };
  CHECK(f(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(f(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f(0.3, 0.7) == doctest::Approx(2.98).epsilon(1e-12));
  CHECK(f(0.5, 0.5) > 0.5 * (f(0, 0) + f(1, 1)));
}

TEST_CASE("subsample example: masked and unmasked estimates") {
  const auto inst = make_subsample_example();
  const Tensor3 masked = masked_mle_estimate(*inst.dataset, 3, 2).dist();
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) CHECK(masked(0, s, a) == 1.0 / 6.0);
  CHECK(masked(1, 0, 0) == 0.5);
  CHECK(masked(1, 1, 0) == 0.5);
  TrajectoryDataset unmasked = *inst.dataset;
  for (auto& t : unmasked.trajectories) t.mask.assign(3, true);
  CHECK(mle_estimate(unmasked, 3, 2).dist()(0, 0, 0) == 1.0);
}

TEST_CASE("random MDPs: determinism, unit rows and an optimal expert") {
  const auto a = make_random_mdp(4, 3, 3, true, 7);
  const auto b = make_random_mdp(4, 3, 3, true, 7);
  CHECK(a.mdp.model().raw() == b.mdp.model().raw());
  CHECK(a.mdp.rewards() == b.mdp.rewards());
  CHECK(a.mdp.model().is_deterministic());
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 4; ++s)
      for (int act = 0; act < 3; ++act) {
        int ones = 0;
        for (double p : a.mdp.model().next(h, s, act)) ones += p == 1.0;
        CHECK(ones == 1);
      }
  Rng rng(8);
  const auto st = make_random_mdp(4, 3, 3, false, 9);
  const double v_e = policy_value(st.mdp, st.expert);
  for (int i = 0; i < 100; ++i) CHECK(policy_value(st.mdp, random_policy(3, 4, 3, rng)) <= v_e + 1e-12);
  CHECK_THROWS(make_random_mdp(0, 2, 2, false, 0));
}

TEST_CASE("env spec validation and family names") {
  EnvSpec bad{EnvFamily::ResetCliff, {}};
  bad.params.num_bad = 0;
  CHECK_THROWS(bad.validate());
  CHECK(family_from_name("reset-cliff") == EnvFamily::ResetCliff);
  CHECK(family_from_name("ResetCliff") == EnvFamily::ResetCliff);
  CHECK(family_name(EnvFamily::ExampleSubsample) == "subsample");
  CHECK_THROWS(family_from_name("cliff"));
}

TEST_CASE("missing-mass extremal initial distribution") {
  const auto rho = missing_mass_extremal_rho(5, 99);
  CHECK(rho[1] == 0.01);
  double sum = 0.0;
  for (double x : rho) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(missing_mass_extremal_rho(10, 5));
}
