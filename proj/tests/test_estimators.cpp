#include <doctest.h>

#include <cmath>
#include <functional>

#include "imitlab/envs.hpp"
#include "imitlab/estimators.hpp"
#include "imitlab/explore.hpp"
#include "imitlab/imitators.hpp"
#include "oracles.hpp"

using namespace imitlab;

namespace {

Trajectory traj(std::vector<StateAction> steps) { return {std::move(steps), {}}; }

TrajectoryDataset dataset(std::vector<Trajectory> ts) {
  TrajectoryDataset d;
  d.trajectories = std::move(ts);
  return d;
}

Policy random_policy(int H, int S, int A, Rng& rng) {
  Tensor3 p(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      const auto x = random_simplex_point(A, rng);
      for (int a = 0; a < A; ++a) p(h, s, a) = x[a];
    }
  return Policy(std::move(p));
}

/// Expert mass of pairs whose state prefix leaves coverage, by enumerating
/// trajectories.
Tensor3 population_second_term(const TabularMDP& mdp, const Policy& pi, const CoverageSets& cov) {
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  Tensor3 out(H, S, A);
  std::function<void(int, int, double, bool)> walk = [&](int h, int s, double p, bool covered) {
    covered = covered && cov.contains(h, s);
    for (int a = 0; a < A; ++a) {
      const double q = p * pi.prob(h, s, a);
      if (q == 0.0) continue;
      if (!covered) out(h, s, a) += q;
      if (h + 1 < H) {
        const auto nx = mdp.model().next(h, s, a);
        for (int s2 = 0; s2 < S; ++s2)
          if (nx[s2] > 0.0) walk(h + 1, s2, q * nx[s2], covered);
      }
    }
  };
  for (int s = 0; s < S; ++s)
    if (mdp.initial_dist()[s] > 0.0) walk(0, s, mdp.initial_dist()[s], true);
  return out;
}

}  // namespace

TEST_CASE("MLE: single trajectory, normalization and rejected inputs") {
  const auto d = dataset({traj({{1, 0}, {2, 1}})});
  const Tensor3 e = mle_estimate(d, 3, 2).dist();
  CHECK(e(0, 1, 0) == 1.0);
  CHECK(e(1, 2, 1) == 1.0);
  double total = 0.0;
  for (double x : e.data()) total += x;
  CHECK(total == 2.0);
  CHECK_THROWS(mle_estimate(TrajectoryDataset{}, 3, 2));
  CHECK_THROWS(mle_estimate(*make_subsample_example().dataset, 3, 2));
  CHECK_THROWS(mle_estimate(dataset({traj({{3, 0}})}), 3, 2));
}

TEST_CASE("MLE error concentrates within the total-variation bound") {
  const auto env = make_random_mdp(3, 2, 2, false, 1);
  Rng rng(2);
  const Policy pi = random_policy(2, 3, 2, rng);
  const Tensor3 truth = oracle::path_occupancy(env.mdp, pi);
  const std::size_t m = 100000;
  const double bound = std::sqrt(2.0 * 3 * 2 * std::log(1.0 / 0.01) / m);
  int within = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const auto data = sample_trajectories(env.mdp, pi, m, derive_seed(3, {std::uint64_t(r)}));
    const auto err = l1_distance(mle_estimate(data, 3, 2).dist(), truth);
    bool ok = true;
    for (double e : err.per_h) ok = ok && e <= bound;
    within += ok;
  }
  CHECK(within >= 0.99 * reps);
}

TEST_CASE("MLE error shrinks at rate m^-1/2") {
  const auto env = make_random_mdp(3, 2, 2, false, 4);
  const Tensor3 truth = oracle::path_occupancy(env.mdp, env.expert);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t m = 16; m <= 4096; m *= 2) {
    double sum = 0.0;
    for (int r = 0; r < 200; ++r) {
      const auto data = sample_trajectories(env.mdp, env.expert, m, derive_seed(5, {m, std::uint64_t(r)}));
      sum += l1_distance(mle_estimate(data, 3, 2).dist(), truth).total;
    }
    pts.emplace_back(double(m), sum / 200);
  }
  CHECK(oracle::loglog_slope(pts) == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("masked MLE") {
  const auto all_masked = dataset({Trajectory{{{0, 0}, {1, 1}}, {false, false}}});
  const Tensor3 u = masked_mle_estimate(all_masked, 2, 3).dist();
  for (double x : u.data()) CHECK(x == 1.0 / 6.0);

  const auto env = make_random_mdp(3, 2, 3, false, 6);
  const auto data = sample_trajectories(env.mdp, env.expert, 30, 7);
  CHECK(masked_mle_estimate(data, 3, 2).dist() == mle_estimate(data, 3, 2).dist());

  auto part = data;
  for (auto& t : part.trajectories) t.mask = {true, false, true};
  const Tensor3 pm = masked_mle_estimate(part, 3, 2).dist();
  const Tensor3 full = mle_estimate(data, 3, 2).dist();
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) {
      CHECK(pm(0, s, a) == full(0, s, a));
      CHECK(pm(2, s, a) == full(2, s, a));
    }
  CHECK_THROWS(masked_mle_estimate(TrajectoryDataset{}, 3, 2));
}

TEST_CASE("dataset split") {
  const auto inst = make_example_three_state();
  const auto two = split_dataset(*inst.dataset, 3, 1);
  CHECK(two.d1.size() == 1);
  CHECK(two.d1c.size() == 1);

  const auto env = make_random_mdp(3, 2, 3, false, 8);
  const auto data = sample_trajectories(env.mdp, env.expert, 11, 9);
  const auto a = split_dataset(data, 3, 10), b = split_dataset(data, 3, 10);
  CHECK(a.d1_indices == b.d1_indices);
  CHECK(a.d1.size() == 5);
  CHECK(a.d1c.size() == 6);
  std::vector<char> seen(11, 0);
  for (auto i : a.d1_indices) seen[i]++;
  for (auto i : a.d1c_indices) seen[i]++;
  for (char c : seen) CHECK(c == 1);
  CHECK_THROWS(split_dataset(dataset({traj({{0, 0}})}), 3, 1));

  const auto tr1 = dataset({inst.dataset->trajectories[0]});
  const auto cov = CoverageSets::from_dataset(tr1, 3);
  CHECK(cov.states(0) == std::vector<int>{0});
  CHECK(cov.states(1) == std::vector<int>{0});
}

TEST_CASE("prefix coverage agrees with a literal membership test") {
  CHECK(prefix_covered(traj({{0, 0}, {1, 0}}), CoverageSets::from_dataset(dataset({traj({{0, 0}, {1, 0}})}), 2), 1));
  const auto first_out = CoverageSets::from_dataset(dataset({traj({{1, 0}, {1, 0}})}), 2);
  CHECK_FALSE(prefix_covered(traj({{0, 0}, {1, 0}}), first_out, 0));
  CHECK_FALSE(prefix_covered(traj({{0, 0}, {1, 0}}), first_out, 1));

  for (int i = 0; i < 10; ++i) {
    Rng rng(derive_seed(11, {std::uint64_t(i)}));
    const int S = 2 + int(rng.below(3)), H = 1 + int(rng.below(3));
    const auto env = make_random_mdp(S, 2, H, false, rng());
    const auto d1 = sample_trajectories(env.mdp, env.expert, 3, rng());
    const auto probe = sample_trajectories(env.mdp, env.expert, 20, rng());
    const auto cov = CoverageSets::from_dataset(d1, S);
    for (const auto& t : probe.trajectories)
      for (int h = 0; h < H; ++h) {
        bool literal = true;
        for (int l = 0; l <= h; ++l) {
          bool found = false;
          for (const auto& u : d1.trajectories) found = found || u.steps[l].state == t.steps[l].state;
          literal = literal && found;
        }
        CHECK(prefix_covered(t, cov, h) == literal);
      }
  }
}

TEST_CASE("MIMIC-MD terms on the three-state example") {
  const auto inst = make_example_three_state();
  const auto& tr1 = inst.dataset->trajectories[0];
  const auto& tr2 = inst.dataset->trajectories[1];
  const auto cov = CoverageSets::from_dataset(dataset({tr1}), 3);
  const Tensor3 second = mimic_md_second_term(dataset({tr2}), cov, 3, 2);
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) CHECK(second(h, s, a) == ((h == 1 && s == 1 && a == 0) ? 1.0 : 0.0));
  const Tensor3 first = mimic_md_first_term(inst.mdp.model(), inst.mdp.initial_dist(), cov, 2);
  CHECK(first(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(first(1, 0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(first(0, 1, 0) == 0.0);
}

TEST_CASE("MIMIC-MD: full coverage is exact, first term is dominated, decomposition is exact") {
  const auto env = make_random_mdp(3, 2, 3, true, 12, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto data = sample_trajectories(env.mdp, env.expert, 200, 13);
  const auto est = mimic_md_estimate(data, env.mdp, 14);
  const Tensor3 pe = oracle::path_occupancy(env.mdp, env.expert);
  CHECK(oracle::l1(est.dist(), pe) <= 1e-12);
  CHECK(est.kind() == DistributionEstimate::Kind::MimicMD);

  for (int i = 0; i < 10; ++i) {
    Rng rng(derive_seed(15, {std::uint64_t(i)}));
    const int S = 2 + int(rng.below(3)), H = 1 + int(rng.below(3));
    const auto e = make_random_mdp(S, 2, H, false, rng());
    const auto d = sample_trajectories(e.mdp, e.expert, 4, rng());
    const auto cov = CoverageSets::from_dataset(d, S);
    const Tensor3 first = mimic_md_first_term(e.mdp.model(), e.mdp.initial_dist(), cov, 2);
    const Tensor3 p = oracle::path_occupancy(e.mdp, e.expert);
    const Tensor3 second = population_second_term(e.mdp, e.expert, cov);
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(first.data()[k] <= p.data()[k] + 1e-15);
      CHECK(std::abs(first.data()[k] + second.data()[k] - p.data()[k]) <= 1e-12);
    }
  }
}

TEST_CASE("MIMIC-MD is unbiased (2000 datasets of 20 trajectories, 4 SE)") {
  const auto env = make_random_mdp(3, 2, 3, false, 16);
  const Tensor3 pe = oracle::path_occupancy(env.mdp, env.expert);
  const int reps = 2000;
  std::vector<double> sum(pe.size(), 0.0), sum2(pe.size(), 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto d = sample_trajectories(env.mdp, env.expert, 20, derive_seed(17, {std::uint64_t(r)}));
    const Tensor3 e = mimic_md_estimate(d, env.mdp, derive_seed(18, {std::uint64_t(r)})).dist();
    for (std::size_t k = 0; k < e.size(); ++k) {
      sum[k] += e.data()[k];
      sum2[k] += e.data()[k] * e.data()[k];
    }
  }
  for (std::size_t k = 0; k < pe.size(); ++k) {
    const double mean = sum[k] / reps;
    const double se = std::sqrt(std::max(0.0, sum2[k] / reps - mean * mean) / (reps - 1));
    CHECK(std::abs(mean - pe.data()[k]) <= 4 * se + 1e-12);
  }
}

TEST_CASE("MIMIC-MD rejects small and conflicting datasets") {
  const auto inst = make_example_three_state();
  CHECK_THROWS(mimic_md_estimate(dataset({inst.dataset->trajectories[0]}), inst.mdp, 1));
  const auto conflict = dataset({traj({{0, 0}, {0, 0}}), traj({{0, 1}, {0, 0}}), traj({{0, 0}, {0, 1}}),
                                 traj({{0, 1}, {0, 1}})});
  bool threw_for_some_seed = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    try {
      mimic_md_estimate(conflict, inst.mdp, seed);
    } catch (const std::invalid_argument&) {
      threw_for_some_seed = true;
    }
  }
  CHECK(threw_for_some_seed);
}

TEST_CASE("model-based MIMIC-MD converges to the known-transition estimate") {
  const auto env = make_random_mdp(3, 2, 3, false, 19);
  const auto data = sample_trajectories(env.mdp, env.expert, 10, 20);
  const auto sampler = rollout_sampler_from(env_sampler_for(env.mdp));
  const auto mb = mimic_md_estimate_model_based(data, {3, 2, 3}, sampler, 100000, 21);
  const auto exact = mimic_md_estimate(data, env.mdp, 21);
  CHECK(mb.kind() == DistributionEstimate::Kind::MimicMDModelBased);
  CHECK(l1_distance(mb.dist(), exact.dist()).total <= 0.02);
  CHECK_THROWS(mimic_md_estimate_model_based(data, {3, 2, 3}, sampler, 0, 21));

  const auto det = make_random_mdp(3, 2, 3, true, 22, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto full = sample_trajectories(det.mdp, det.expert, 200, 23);
  const auto split = split_dataset(full, 3, 24);
  const Tensor3 second = mimic_md_second_term(split.d1c, split.coverage, 3, 2);
  for (double x : second.data()) CHECK(x == 0.0);
}

TEST_CASE("missing mass") {
  const std::vector<double> rho = {0.5, 0.3, 0.2};
  CHECK(missing_mass(std::vector<int>{0, 1, 2, 1}, rho) == 0.0);
  CHECK(missing_mass(std::vector<int>{}, rho) == 1.0);
  CHECK(missing_mass(std::vector<int>{1}, rho) == doctest::Approx(0.7).epsilon(1e-15));

  const int S = 20, m = 10, reps = 5000;
  const std::vector<double> uni(S, 1.0 / S);
  Rng rng(25);
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    std::vector<int> seen;
    for (int i = 0; i < m; ++i) seen.push_back(int(rng.categorical(uni)));
    const double x = missing_mass(seen, uni);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / reps, se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  double expected = 0.0;
  for (double p : uni) expected += p * std::pow(1 - p, m);
  CHECK(std::abs(mean - expected) <= 3 * se);
}

TEST_CASE("estimate invariants") {
  CHECK_THROWS(DistributionEstimate(Tensor3(1, 2, 1, 0.6), DistributionEstimate::Kind::MLE));
  CHECK_THROWS(DistributionEstimate(Tensor3(1, 2, 1, -0.1), DistributionEstimate::Kind::MimicMD));
  CHECK_THROWS(DistributionEstimate(Tensor3(1, 2, 1, 1.1), DistributionEstimate::Kind::MimicMD));
  CHECK_NOTHROW(DistributionEstimate(Tensor3(1, 2, 1, 0.9), DistributionEstimate::Kind::MimicMD));
  CHECK(kind_from_name(kind_name(DistributionEstimate::Kind::MaskedMLE)) == DistributionEstimate::Kind::MaskedMLE);
}
