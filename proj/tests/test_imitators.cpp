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

Trajectory traj(std::vector<StateAction> steps) { return {std::move(steps), {}}; }

}  // namespace

TEST_CASE("VAIL objective agrees with trajectory enumeration") {
  for (int i = 0; i < 10; ++i) {
    Rng rng(derive_seed(1, {std::uint64_t(i)}));
    const auto env = make_random_mdp(3, 2, 3, false, rng());
    const Policy pi = random_policy(3, 3, 2, rng);
    const Tensor3 est = mle_estimate(sample_trajectories(env.mdp, env.expert, 7, rng()), 3, 2).dist();
    CHECK(vail_objective(env.mdp.model(), env.mdp.initial_dist(), pi, est) ==
          doctest::Approx(oracle::objective(env.mdp, pi, est)).epsilon(1e-12));
  }
}

TEST_CASE("behavioural cloning") {
  TrajectoryDataset d;
  d.trajectories = {traj({{0, 1}, {2, 0}}), traj({{1, 0}, {2, 0}})};
  const Policy pi = bc(d, 3, 2, 2);
  CHECK(pi.prob(0, 0, 1) == 1.0);
  CHECK(pi.prob(0, 1, 0) == 1.0);
  CHECK(pi.prob(0, 2, 0) == 0.5);
  CHECK(pi.prob(1, 2, 0) == 1.0);
  CHECK(pi.prob(1, 0, 1) == 0.5);
  d.trajectories.push_back(traj({{0, 0}, {2, 0}}));
  CHECK_THROWS(bc(d, 3, 2, 2));
  CHECK(bc(TrajectoryDataset{}, 3, 2, 2).probs() == Policy::uniform(2, 3, 2).probs());
}

TEST_CASE("Standard Imitation closed form: worst member and midpoint gaps") {
  const std::vector<double> rho = {0.5, 0.3, 0.2};
  const auto env = make_standard_imitation(3, 2, 3, rho);
  for (int i = 0; i < 5; ++i) {
    const auto data = sample_trajectories(env.mdp, env.expert, 5, derive_seed(2, {std::uint64_t(i)}));
    const Tensor3 est = mle_estimate(data, 3, 2).dist();
    const auto sol = vail_standard_imitation_exact(est, rho, 3);
    const double err = l1_distance(est, compute_occupancy(env.mdp, env.expert).dist()).total;
    const Policy worst = interval_policy(sol.optimal_set, 2, 0.0);
    const Policy mid = interval_policy(sol.optimal_set, 2, 0.5);
    CHECK(value_gap(env.mdp, env.expert, worst) == doctest::Approx(err / 2).epsilon(1e-12));
    CHECK(value_gap(env.mdp, env.expert, mid) == doctest::Approx(err / 4).epsilon(1e-12));
    CHECK(oracle::objective(env.mdp, sol.policy, est) == doctest::Approx(sol.objective_value).epsilon(1e-12));
    CHECK(oracle::objective(env.mdp, worst, est) == doctest::Approx(sol.objective_value).epsilon(1e-12));
  }
  Tensor3 off(3, 3, 2);
  for (int h = 0; h < 3; ++h) off(h, 0, 1) = 1.0;
  CHECK_THROWS(vail_standard_imitation_exact(off, rho, 0));
}

TEST_CASE("grid search on the two-state bandit recovers the optimal intervals") {
  const auto b = make_two_state_bandit();
  const auto sol = vail_bruteforce(b.mdp, b.estimate->dist(), 0.01);
  CHECK(sol.optimal_set[0][0].lo == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(sol.optimal_set[0][0].hi == 1.0);
  CHECK(sol.optimal_set[0][1].lo == 1.0);
  CHECK(sol.objective_value == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(sol.lipschitz_slack == doctest::Approx(0.01 * 2 * 1 * 2 * 2).epsilon(1e-12));
}

TEST_CASE("grid search minimum matches a direct scan of the non-convex example") {
  const auto inst = make_nonconvex_example();
  const Tensor3 est = mle_estimate(*inst.dataset, 5, 2).dist();
  const auto sol = vail_bruteforce(inst.mdp, est, 0.05);
  double best = 1e300;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      std::vector<std::vector<double>> p(2, std::vector<double>(5, 1.0));
      p[0][0] = i / 20.0;
      p[1][1] = j / 20.0;
      best = std::min(best, oracle::objective(inst.mdp, oracle::two_action_policy(p), est));
    }
  CHECK(sol.objective_value <= best + 1e-12);
  CHECK(oracle::objective(inst.mdp, sol.policy, est) == doctest::Approx(sol.objective_value).epsilon(1e-12));
}

TEST_CASE("TAIL on the three-state example approaches the VAIL minimum") {
  const auto inst = make_example_three_state();
  const Tensor3 est = mle_estimate(*inst.dataset, 3, 2).dist();
  TailOptions opt;
  opt.iterations = 2000;
  const auto res = tail(inst.mdp.model(), inst.mdp.initial_dist(), est, opt);
  const double f = oracle::objective(inst.mdp, res.policy, est);
  CHECK(res.best_dual_value <= 1.0 + 1e-12);
  CHECK(f >= 1.0 - 1e-12);
  CHECK(f - 1.0 <= 2.0 * res.regret_bound);
  CHECK(res.trace.size() == 2000);
  CHECK(default_eta(3, 2, 2000) == doctest::Approx(std::sqrt(6.0 / 16000)).epsilon(1e-15));

  opt.keep_trace = false;
  CHECK(tail(inst.mdp.model(), inst.mdp.initial_dist(), est, opt).trace.empty());
}

TEST_CASE("policy of a mean occupancy reproduces that occupancy") {
  Rng rng(4);
  const auto env = make_random_mdp(3, 2, 3, false, 5);
  Tensor3 mix(3, 3, 2);
  for (int k = 0; k < 4; ++k) {
    const Tensor3 o = compute_occupancy(env.mdp, random_policy(3, 3, 2, rng)).dist();
    for (std::size_t i = 0; i < o.size(); ++i) mix.data()[i] += o.data()[i] / 4;
  }
  const Tensor3 back = oracle::path_occupancy(env.mdp, mean_occupancy_policy(mix));
  CHECK(oracle::l1(back, mix) <= 1e-12);

  const Policy u = mean_occupancy_policy(Tensor3(1, 2, 2));
  CHECK(u.prob(0, 1, 1) == 0.5);
}

TEST_CASE("certificate on Reset Cliff") {
  const auto rc = make_reset_cliff(3, 1, 2, 4, 6);
  const Tensor3 pe = compute_occupancy(rc.mdp, rc.expert).dist();
  const auto cert = approx_optimality_certificate(rc.mdp, rc.expert, pe, 0.0);
  CHECK(cert.satisfied);
  CHECK(cert.lhs == 0.0);
  CHECK(cert.c_pi > 0.0);
  CHECK(cert.c_pi <= 1.0);

  Tensor3 p = rc.expert.probs();
  for (int s = 0; s < 4; ++s) {
    p(1, s, 0) = 0.5;
    p(1, s, 1) = 0.5;
  }
  const auto leaky = approx_optimality_certificate(rc.mdp, Policy(p), pe, 0.0);
  CHECK(leaky.lhs > 0.0);
  CHECK_FALSE(leaky.satisfied);

  const auto si = make_standard_imitation(3, 2, 4, {0.2, 0.3, 0.5});
  CHECK_THROWS(approx_optimality_certificate(si.mdp, si.expert, compute_occupancy(si.mdp, si.expert).dist(), 0.0));
  CHECK_THROWS(approx_optimality_certificate(rc.mdp, Policy::constant(4, 4, 2, 1), pe, 0.0));
}

TEST_CASE("BC attains the VAIL grid minimum with one trajectory on deterministic MDPs") {
  for (int i = 0; i < 5; ++i) {
    const auto env = make_random_mdp(3, 2, 3, true, derive_seed(7, {std::uint64_t(i)}));
    const auto one = sample_trajectories(env.mdp, env.expert, 1, i);
    const auto chk = verify_bc_is_ail_optimum(env.mdp, one, 0.05);
    CHECK(chk.passed);
    CHECK(chk.bc_objective <= chk.grid_minimum + 1e-9);
  }
  const auto st = make_random_mdp(3, 2, 3, false, 8);
  CHECK_THROWS(verify_bc_is_ail_optimum(st.mdp, sample_trajectories(st.mdp, st.expert, 1, 0)));
}

TEST_CASE("model-based TAIL is deterministic and close to the expert on Reset Cliff") {
  const auto rc = make_reset_cliff(3, 1, 2, 3, 9);
  const auto data = sample_trajectories(rc.mdp, rc.expert, 32, 10);
  const auto sampler = env_sampler_for(rc.mdp);
  const ProblemDims dims{4, 2, 3};
  const auto a = mb_tail(sampler, data, dims, 2000, 2000, 500, ExplorationStrategy::count_greedy(), 11);
  const auto b = mb_tail(sampler, data, dims, 2000, 2000, 500, ExplorationStrategy::count_greedy(), 11);
  CHECK(a.policy.probs() == b.policy.probs());
  CHECK(a.diagnostics.transitions_collected == 2000 * 2);
  CHECK(value_gap(rc.mdp, rc.expert, a.policy) <= 0.5);
  CHECK(mb_tail_stage_seed(11, 0) != mb_tail_stage_seed(11, 1));

  const auto oracle_run = mb_tail(sampler, data, dims, 0, 2000, 500, ExplorationStrategy::oracle(rc.mdp), 11);
  CHECK(oracle_run.diagnostics.model.raw() == rc.mdp.model().raw());
}
