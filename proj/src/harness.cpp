#include "imitlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "imitlab/estimators.hpp"
#include "imitlab/explore.hpp"
#include "imitlab/imitators.hpp"
#include "imitlab/solvers.hpp"

namespace imitlab {

// ---------------------------------------------------------------------------
// Configuration

void SweepConfig::validate() const {
  env.validate();
  if (m_grid.empty()) throw std::invalid_argument("sweep config: m_grid is empty");
  for (auto m : m_grid)
    if (m < 1) throw std::invalid_argument("sweep config: m values must be positive");
  for (int h : h_grid)
    if (h < 1) throw std::invalid_argument("sweep config: h values must be positive");
  if (seeds_per_cell < 1) throw std::invalid_argument("sweep config: seeds_per_cell must be at least 1");
  if (!rho_schedule.empty() && rho_schedule != "missing-mass-extremal")
    throw std::invalid_argument("sweep config: unknown rho_schedule " + rho_schedule);
  static const char* kAlgorithms[] = {"vail-exact", "bc", "tail-mimic", "vail-tail", "mbtail"};
  if (std::find(std::begin(kAlgorithms), std::end(kAlgorithms), algorithm.id) == std::end(kAlgorithms))
    throw std::invalid_argument("sweep config: unknown algorithm " + algorithm.id);
  if (algorithm.id == "vail-exact" && env.family != EnvFamily::StandardImitation)
    throw std::invalid_argument("sweep config: vail-exact needs the standard-imitation family");
  if (algorithm.T < 1) throw std::invalid_argument("sweep config: T must be at least 1");
  if ((algorithm.id == "tail-mimic" || algorithm.id == "mbtail"))
    for (auto m : m_grid)
      if (m < 2) throw std::invalid_argument("sweep config: MIMIC-MD needs m >= 2");
}

SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig c;
  const auto& e = j.at("env");
  c.env.family = family_from_name(e.at("family").get<std::string>());
  if (e.contains("params")) {
    const auto& p = e.at("params");
    auto& q = c.env.params;
    q.num_states = p.value("num_states", q.num_states);
    q.num_actions = p.value("num_actions", q.num_actions);
    q.horizon = p.value("horizon", q.horizon);
    q.num_good = p.value("num_good", q.num_good);
    q.num_bad = p.value("num_bad", q.num_bad);
    q.seed = p.value("seed", q.seed);
    q.rho = p.value("rho", q.rho);
    q.rho_mode = p.value("rho_mode", q.rho_mode);
  }
  c.rho_schedule = j.value("rho_schedule", std::string{});
  if (j.contains("algorithm")) {
    const auto& a = j.at("algorithm");
    c.algorithm.id = a.at("id").get<std::string>();
    if (a.contains("params")) {
      const auto& p = a.at("params");
      c.algorithm.T = p.value("T", c.algorithm.T);
      c.algorithm.n = p.value("n", c.algorithm.n);
      c.algorithm.n_prime = p.value("n_prime", c.algorithm.n_prime);
      c.algorithm.explore = p.value("explore", c.algorithm.explore);
      c.algorithm.bonus_scale = p.value("bonus_scale", c.algorithm.bonus_scale);
    }
  }
  c.m_grid = j.at("m_grid").get<std::vector<std::size_t>>();
  c.h_grid = j.value("h_grid", std::vector<int>{});
  c.seeds_per_cell = j.value("seeds_per_cell", 1);
  c.base_seed = j.value("base_seed", std::uint64_t{0});
  c.output = j.value("output", std::string{});
  c.record_timing = j.value("record_timing", false);
  c.threads = j.value("threads", 0);
  c.validate();
  return c;
}

json sweep_config_to_json(const SweepConfig& c) {
  const auto& p = c.env.params;
  json params = {{"num_states", p.num_states}, {"num_actions", p.num_actions}, {"horizon", p.horizon},
                 {"num_good", p.num_good},     {"num_bad", p.num_bad},         {"seed", p.seed}};
  if (!p.rho.empty()) params["rho"] = p.rho;
  if (!p.rho_mode.empty()) params["rho_mode"] = p.rho_mode;
  json j = {{"env", {{"family", family_name(c.env.family)}, {"params", params}}},
            {"algorithm",
             {{"id", c.algorithm.id},
              {"params",
               {{"T", c.algorithm.T},
                {"n", c.algorithm.n},
                {"n_prime", c.algorithm.n_prime},
                {"explore", c.algorithm.explore},
                {"bonus_scale", c.algorithm.bonus_scale}}}}},
            {"m_grid", c.m_grid},
            {"h_grid", c.h_grid},
            {"seeds_per_cell", c.seeds_per_cell},
            {"base_seed", c.base_seed},
            {"record_timing", c.record_timing}};
  if (!c.rho_schedule.empty()) j["rho_schedule"] = c.rho_schedule;
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

// ---------------------------------------------------------------------------
// Cells

std::uint64_t cell_seed(const SweepConfig& c, int H, std::size_t m, int rep) {
  return derive_seed(c.base_seed, {static_cast<std::uint64_t>(c.env.family), static_cast<std::uint64_t>(H), m,
                                   static_cast<std::uint64_t>(rep)});
}

EnvInstance cell_env(const SweepConfig& c, int H, std::size_t m) {
  EnvSpec spec = c.env;
  spec.params.horizon = H;
  if (c.rho_schedule == "missing-mass-extremal") {
    spec.params.rho = missing_mass_extremal_rho(spec.params.num_states, m);
    spec.params.rho_mode.clear();
  }
  return make_env(spec);
}

namespace {

ExplorationStrategy strategy_for(const AlgorithmSpec& a, const TabularMDP& truth) {
  if (a.explore == "oracle") return ExplorationStrategy::oracle(truth);
  if (a.explore == "uniform") return ExplorationStrategy::uniform();
  if (a.explore == "count-greedy") return ExplorationStrategy::count_greedy(a.bonus_scale);
  throw std::invalid_argument("unknown exploration strategy: " + a.explore);
}

std::vector<int> horizons(const SweepConfig& c) {
  return c.h_grid.empty() ? std::vector<int>{c.env.params.horizon} : c.h_grid;
}

}  // namespace

SweepRow run_cell(const SweepConfig& c, int H, std::size_t m, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const EnvInstance env = cell_env(c, H, m);
  const TabularMDP& mdp = env.mdp;
  const int S = mdp.num_states(), A = mdp.num_actions();
  const TrajectoryDataset data = sample_trajectories(mdp, env.expert, m, seed);
  const std::uint64_t alg_seed = derive_seed(seed, {1});
  const Tensor3 pe = compute_occupancy(mdp, env.expert).dist();
  const auto& alg = c.algorithm;

  std::optional<DistributionEstimate> est;
  Policy learner;
  if (alg.id == "vail-exact") {
    est = mle_estimate(data, S, A);
    learner = vail_standard_imitation_exact(est->dist(), mdp.initial_dist(), alg_seed).policy;
  } else if (alg.id == "bc") {
    est = mle_estimate(data, S, A);
    learner = bc(data, S, A, H);
  } else if (alg.id == "tail-mimic" || alg.id == "vail-tail") {
    est = alg.id == "tail-mimic" ? mimic_md_estimate(data, mdp, alg_seed) : mle_estimate(data, S, A);
    TailOptions opt;
    opt.iterations = alg.T;
    opt.keep_trace = false;
    learner = tail(mdp.model(), mdp.initial_dist(), est->dist(), opt).policy;
  } else if (alg.id == "mbtail") {
    auto res = mb_tail(env_sampler_for(mdp), data, {S, A, H}, alg.n, alg.n_prime, alg.T, strategy_for(alg, mdp),
                       alg_seed);
    learner = std::move(res.policy);
    est = std::move(res.diagnostics.estimate);
  } else {
    throw std::invalid_argument("unknown algorithm " + alg.id);
  }

  SweepRow row;
  row.env_family = family_name(c.env.family);
  row.H = H;
  row.S = S;
  row.A = A;
  row.m = m;
  row.seed = seed;
  row.algorithm = alg.id;
  row.value_gap = value_gap(mdp, env.expert, learner);
  row.estimation_error = l1_distance(est->dist(), pe).total;
  row.objective = vail_objective(mdp.model(), mdp.initial_dist(), learner, est->dist());
  if (c.record_timing)
    row.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!std::isfinite(row.value_gap)) throw std::runtime_error("run_cell: value gap is not finite");
  return row;
}

std::vector<SweepRow> sweep(const SweepConfig& c) {
  c.validate();
  struct Task {
    int H;
    std::size_t m;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int H : horizons(c))
    for (auto m : c.m_grid)
      for (int r = 0; r < c.seeds_per_cell; ++r) tasks.push_back({H, m, cell_seed(c, H, m, r)});

  std::vector<SweepRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        rows[i] = run_cell(c, tasks[i].H, tasks[i].m, tasks[i].seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_threads = c.threads > 0 ? static_cast<unsigned>(c.threads) : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.env_family, a.H, a.m, a.algorithm, a.seed) <
           std::tie(b.env_family, b.H, b.m, b.algorithm, b.seed);
  });
  return rows;
}

std::string rows_to_csv(std::span<const SweepRow> rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%zu,%llu,%s,%.12g,%.12g,%.12g,%.3f\n", r.env_family.c_str(), r.H, r.S,
                  r.A, r.m, static_cast<unsigned long long>(r.seed), r.algorithm.c_str(), r.value_gap,
                  r.estimation_error, r.objective, r.wall_time_ms);
    out += buf;
  }
  return out;
}

void write_csv(const std::string& path, std::span<const SweepRow> rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << rows_to_csv(rows);
}

std::string gnuplot_stub(const std::string& csv_path) {
  std::ostringstream os;
  os << "# Mean value gap against m, one curve per horizon.\n"
     << "# Columns: " << kCsvHeader << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale xy\n"
     << "set xlabel 'm (expert trajectories)'\n"
     << "set ylabel 'value gap'\n"
     << "plot '" << csv_path << "' using 5:8 smooth unique with linespoints title 'mean value gap'\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Rates

SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (auto [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : points) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: x values are all equal");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

std::vector<CellSummary> summarize(std::span<const SweepRow> rows) {
  std::map<std::pair<int, std::size_t>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.H, r.m}].push_back(r.value_gap);
  std::vector<CellSummary> out;
  for (const auto& [key, gaps] : groups) {
    CellSummary c;
    c.H = key.first;
    c.m = key.second;
    c.count = gaps.size();
    double sum = 0;
    for (double g : gaps) sum += g;
    c.mean_gap = sum / gaps.size();
    if (gaps.size() > 1) {
      double ss = 0;
      for (double g : gaps) ss += (g - c.mean_gap) * (g - c.mean_gap);
      c.std_error = std::sqrt(ss / (gaps.size() - 1) / gaps.size());
    }
    out.push_back(c);
  }
  return out;
}

HorizonContrast horizon_contrast(const SweepConfig& c) {
  const auto rows = sweep(c);
  HorizonContrast out;
  out.family = family_name(c.env.family);
  out.cells = summarize(rows);
  if (horizons(c).size() < 2) return out;
  for (auto m : c.m_grid) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& cell : out.cells)
      if (cell.m == m) pts.emplace_back(cell.H, cell.mean_gap);
    out.slope_vs_h.emplace_back(m, fit_loglog_slope(pts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Claim verification

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ClaimCheck& c) { return c.passed; });
}

namespace {

struct Outcome {
  bool passed;
  std::string expected;
  std::string observed;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void run_check(VerifyReport& rep, std::string id, int criterion, std::string description,
               const std::function<Outcome()>& fn) {
  ClaimCheck c;
  c.id = std::move(id);
  c.criterion = criterion;
  c.description = std::move(description);
  const auto start = std::chrono::steady_clock::now();
  try {
    Outcome o = fn();
    c.passed = o.passed;
    c.expected = std::move(o.expected);
    c.observed = std::move(o.observed);
  } catch (const std::exception& e) {
    c.passed = false;
    c.observed = std::string("error: ") + e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.checks.push_back(std::move(c));
}

bool all_reached_are_one(const VailSolution& sol, const std::vector<int>& good, int steps) {
  for (int h = 0; h < steps; ++h)
    for (int s : good) {
      const auto& iv = sol.optimal_set[h][s];
      if (!iv.reached || iv.lo != 1.0 || iv.hi != 1.0) return false;
    }
  return true;
}

Outcome recovery_outcome(const TabularMDP& mdp, const Tensor3& est) {
  const VailSolution sol = vail_bruteforce(mdp, est, 0.02);
  const bool ones = all_reached_are_one(sol, {0, 1}, mdp.horizon());
  const bool unique = sol.optimal_point_count == 1.0;
  return {ones && unique, "pi_h(a1|s) = 1 on good states for every h, one optimal grid point",
          "optimal points " + fmt(sol.optimal_point_count) + ", all-ones " + (ones ? "yes" : "no") +
              ", objective " + fmt(sol.objective_value)};
}

}  // namespace

VerifyReport verify_paper_claims(const VerifyOptions& options) {
  if (!options.inject_fault.empty() && options.inject_fault != "bandit-boundary")
    throw std::invalid_argument("verify: unknown fault " + options.inject_fault);
  VerifyReport rep;

  // Criterion 1: two-state bandit.
  const EnvInstance bandit = make_two_state_bandit();
  const VailSolution bandit_sol =
      vail_standard_imitation_exact(bandit.estimate->dist(), bandit.mdp.initial_dist(), 1);
  run_check(rep, "bandit-optimal-set", 1, "two-state bandit optimal set is [0.8, 1] x {1}", [&]() -> Outcome {
    const double expected_lo = options.inject_fault == "bandit-boundary" ? 0.7 : 0.8;
    const auto& a = bandit_sol.optimal_set[0][0];
    const auto& b = bandit_sol.optimal_set[0][1];
    const bool ok = std::abs(a.lo - expected_lo) <= 1e-10 && a.hi == 1.0 && b.lo == 1.0 && b.hi == 1.0;
    return {ok, "[" + fmt(expected_lo) + ", 1] and [1, 1]",
            "[" + fmt(a.lo) + ", " + fmt(a.hi) + "] and [" + fmt(b.lo) + ", " + fmt(b.hi) + "]"};
  });
  run_check(rep, "bandit-worst-gap", 1, "largest value gap in the bandit optimal set is 0.1", [&]() -> Outcome {
    const Policy worst = interval_policy(bandit_sol.optimal_set, 2, 0.0);
    const double gap = value_gap(bandit.mdp, bandit.expert, worst);
    return {std::abs(gap - 0.1) <= 1e-10, "0.1", fmt(gap)};
  });
  run_check(rep, "bandit-bruteforce", 1, "grid search at resolution 0.001 finds the same boundary", [&]() -> Outcome {
    const VailSolution bf = vail_bruteforce(bandit.mdp, bandit.estimate->dist(), 0.001);
    const auto& a = bf.optimal_set[0][0];
    const auto& b = bf.optimal_set[0][1];
    const bool ok = std::abs(a.lo - 0.8) <= 0.001 + 1e-12 && a.hi == 1.0 && b.lo >= 0.999 - 1e-12 && b.hi == 1.0;
    return {ok, "[0.8 +- 0.001, 1] and [1 +- 0.001, 1]",
            "[" + fmt(a.lo) + ", " + fmt(a.hi) + "] and [" + fmt(b.lo) + ", " + fmt(b.hi) + "]"};
  });

  // Criterion 2: gap identities on random Standard Imitation instances.
  run_check(rep, "standard-imitation-gap-identity", 2,
            "worst gap = L1/2 and uniform-sample expected gap = L1/4 on 20 random instances", [&]() -> Outcome {
              Rng rng(20240611);
              double worst_err = 0.0, mid_err = 0.0;
              int mc_fail = 0;
              for (int i = 0; i < 20; ++i) {
                Rng r = rng.split(i);
                const int S = 2 + static_cast<int>(r.below(5));
                const int H = 1 + static_cast<int>(r.below(5));
                const int A = 2 + static_cast<int>(r.below(2));
                const std::size_t m = 1 + r.below(16);
                const auto env = make_standard_imitation(S, A, H, random_simplex_point(S, r));
                const auto data = sample_trajectories(env.mdp, env.expert, m, r());
                const auto est = mle_estimate(data, S, A);
                const double l1 = l1_distance(est.dist(), compute_occupancy(env.mdp, env.expert).dist()).total;
                const auto sol = vail_standard_imitation_exact(est.dist(), env.mdp.initial_dist(), r());
                const double worst = value_gap(env.mdp, env.expert, interval_policy(sol.optimal_set, A, 0.0));
                const double mid = value_gap(env.mdp, env.expert, interval_policy(sol.optimal_set, A, 0.5));
                worst_err = std::max(worst_err, std::abs(worst - 0.5 * l1));
                mid_err = std::max(mid_err, std::abs(mid - 0.25 * l1));
                const int draws = 10000;
                double sum = 0, sum2 = 0;
                for (int d = 0; d < draws; ++d) {
                  const auto s = vail_standard_imitation_exact(est.dist(), env.mdp.initial_dist(),
                                                               derive_seed(i, {static_cast<std::uint64_t>(d)}));
                  const double g = value_gap(env.mdp, env.expert, s.policy);
                  sum += g;
                  sum2 += g * g;
                }
                const double mean = sum / draws;
                const double se = std::sqrt(std::max(0.0, sum2 / draws - mean * mean) / (draws - 1));
                if (std::abs(mean - 0.25 * l1) > 3.0 * se + 1e-12) ++mc_fail;
              }
              const bool ok = worst_err <= 1e-10 && mid_err <= 1e-10 && mc_fail == 0;
              return {ok, "errors <= 1e-10, Monte Carlo within 3 SE on all 20",
                      "worst err " + fmt(worst_err) + ", midpoint err " + fmt(mid_err) + ", MC misses " +
                          std::to_string(mc_fail)};
            });

  // Criterion 3: expert recovery on the three-state and subsampled examples.
  run_check(rep, "three-state-recovery", 3, "grid optimum on the three-state example is the expert", [&] {
    const auto inst = make_example_three_state();
    return recovery_outcome(inst.mdp, mle_estimate(*inst.dataset, 3, 2).dist());
  });
  run_check(rep, "subsample-recovery", 3, "grid optimum on the masked H=3 example is the expert", [&] {
    const auto inst = make_subsample_example();
    return recovery_outcome(inst.mdp, masked_mle_estimate(*inst.dataset, 3, 2).dist());
  });

  // Criterion 4: non-convexity.
  const EnvInstance nc = make_nonconvex_example();
  const Tensor3 nc_est = mle_estimate(*nc.dataset, 5, 2).dist();
  auto f_nc = [&](double x, double y) {
    Tensor3 p(2, 5, 2);
    for (int h = 0; h < 2; ++h)
      for (int s = 0; s < 5; ++s) p(h, s, 0) = 1.0;
    p(0, 0, 0) = x;
    p(0, 0, 1) = 1.0 - x;
    p(1, 1, 0) = y;
    p(1, 1, 1) = 1.0 - y;
    return vail_objective(nc.mdp.model(), nc.mdp.initial_dist(), Policy(std::move(p)), nc_est);
  };
  run_check(rep, "nonconvex-formula", 4, "VAIL objective equals 2(2 - x - xy) at 100 random points", [&]() -> Outcome {
    Rng rng(4);
    double err = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double x = rng.uniform(), y = rng.uniform();
      err = std::max(err, std::abs(f_nc(x, y) - 2.0 * (2.0 - x - x * y)));
    }
    return {err <= 1e-10, "max error <= 1e-10", fmt(err)};
  });
  run_check(rep, "nonconvex-midpoint", 4, "midpoint of (0,0) and (1,1) violates convexity", [&]() -> Outcome {
    const double mid = f_nc(0.5, 0.5), avg = 0.5 * (f_nc(0.0, 0.0) + f_nc(1.0, 1.0));
    return {mid > avg, "f(0.5, 0.5) > (f(0,0) + f(1,1)) / 2", fmt(mid) + " vs " + fmt(avg)};
  });

  // Criterion 5: BC is the VAIL optimum with one trajectory.
  run_check(rep, "bc-reduction", 5, "BC attains the VAIL grid minimum on 20 random deterministic MDPs",
            [&]() -> Outcome {
              int passed = 0;
              std::string worst;
              for (int i = 0; i < 20; ++i) {
                Rng r(derive_seed(5, {static_cast<std::uint64_t>(i)}));
                const int S = 2 + static_cast<int>(r.below(2));
                const int H = 1 + static_cast<int>(r.below(3));
                const auto env = make_random_mdp(S, 2, H, true, r());
                const auto data = sample_trajectories(env.mdp, env.expert, 1, r());
                const auto chk = verify_bc_is_ail_optimum(env.mdp, data, 0.01);
                if (chk.passed)
                  ++passed;
                else
                  worst = "instance " + std::to_string(i) + ": BC " + fmt(chk.bc_objective) + " > grid " +
                          fmt(chk.grid_minimum);
              }
              return {passed == 20, "20 of 20", std::to_string(passed) + " of 20" + (worst.empty() ? "" : "; " + worst)};
            });

  // Criterion 7: TAIL optimization contract.
  run_check(rep, "tail-minimax-bound", 7,
            "TAIL objective within 2H sqrt(2|S||A|/T) of the optimum; OGD regret within its bound",
            [&]() -> Outcome {
              std::ostringstream obs;
              bool ok = true;
              {
                const auto inst = make_example_three_state();
                const Tensor3 est = mle_estimate(*inst.dataset, 3, 2).dist();
                TailOptions opt;
                opt.iterations = 2000;
                const auto tr = tail(inst.mdp.model(), inst.mdp.initial_dist(), est, opt);
                const double f = vail_objective(inst.mdp.model(), inst.mdp.initial_dist(), tr.policy, est);
                const double fmin = vail_bruteforce(inst.mdp, est, 0.02).objective_value;
                const auto audit = regret_audit(tr.trace, est);
                const bool ok1 = f <= fmin + tr.regret_bound && audit.within_bound;
                ok = ok && ok1;
                obs << "three-state f=" << fmt(f) << " min=" << fmt(fmin) << " bound=" << fmt(tr.regret_bound)
                    << " regret=" << fmt(audit.empirical_regret) << "; ";
              }
              int misses = 0;
              for (int i = 0; i < 5; ++i) {
                const auto env = make_reset_cliff(3, 1, 2, 5, 100 + i);
                const auto data = sample_trajectories(env.mdp, env.expert, 16, 200 + i);
                const Tensor3 est = mimic_md_estimate(data, env.mdp, 300 + i).dist();
                TailOptions opt;
                opt.iterations = 500;
                const auto tr = tail(env.mdp.model(), env.mdp.initial_dist(), est, opt);
                const double f = vail_objective(env.mdp.model(), env.mdp.initial_dist(), tr.policy, est);
                const auto audit = regret_audit(tr.trace, est);
                if (!(f <= tr.best_dual_value + tr.regret_bound) || !audit.within_bound) ++misses;
              }
              ok = ok && misses == 0;
              obs << "reset-cliff runs violating the dual bound or regret bound: " << misses << " of 5";
              return {ok, "all runs within bounds", obs.str()};
            });

  // Criterion 8: estimator properties.
  run_check(rep, "mimic-md-unbiased", 8, "MIMIC-MD mean over 2000 datasets (m=20) matches the expert occupancy",
            [&]() -> Outcome {
              const auto env = make_random_mdp(3, 2, 3, false, 8);
              const Tensor3 pe = compute_occupancy(env.mdp, env.expert).dist();
              const int reps = 2000;
              std::vector<double> sum(pe.size(), 0.0), sum2(pe.size(), 0.0);
              for (int r = 0; r < reps; ++r) {
                const auto data = sample_trajectories(env.mdp, env.expert, 20, derive_seed(80, {std::uint64_t(r)}));
                const Tensor3 e = mimic_md_estimate(data, env.mdp, derive_seed(81, {std::uint64_t(r)})).dist();
                for (std::size_t k = 0; k < e.size(); ++k) {
                  sum[k] += e.data()[k];
                  sum2[k] += e.data()[k] * e.data()[k];
                }
              }
              double worst_z = 0.0;
              for (std::size_t k = 0; k < pe.size(); ++k) {
                const double mean = sum[k] / reps;
                const double se = std::sqrt(std::max(0.0, sum2[k] / reps - mean * mean) / (reps - 1));
                const double diff = std::abs(mean - pe.data()[k]);
                if (se == 0.0) {
                  if (diff > 1e-12) worst_z = std::numeric_limits<double>::infinity();
                } else {
                  worst_z = std::max(worst_z, diff / se);
                }
              }
              return {worst_z <= 4.0, "every entry within 4 SE", "largest deviation " + fmt(worst_z) + " SE"};
            });
  run_check(rep, "mimic-md-full-coverage", 8, "fully covering D1 gives the exact occupancy", [&]() -> Outcome {
    const int S = 3, H = 3;
    const auto env = make_random_mdp(S, 2, H, true, 9, std::vector<double>(S, 1.0 / S));
    const auto data = sample_trajectories(env.mdp, env.expert, 200, 10);
    const auto est = mimic_md_estimate(data, env.mdp, 11);
    const Tensor3 pe = compute_occupancy(env.mdp, env.expert).dist();
    const auto& cov = est.split_record()->coverage;
    bool covered = true;
    const auto pm = state_marginal(pe);
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s)
        if (pm[h][s] > 0.0 && !cov.contains(h, s)) covered = false;
    const double err = l1_distance(est.dist(), pe).total;
    return {covered && err <= 1e-12, "D1 covers every expert state and error <= 1e-12",
            std::string("covered ") + (covered ? "yes" : "no") + ", error " + fmt(err)};
  });
  run_check(rep, "masked-mle-table", 8, "masked MLE on the subsampled example reproduces the 1/6 table",
            [&]() -> Outcome {
              const auto inst = make_subsample_example();
              const Tensor3 e = masked_mle_estimate(*inst.dataset, 3, 2).dist();
              bool ok = true;
              for (int s = 0; s < 3; ++s)
                for (int a = 0; a < 2; ++a) ok = ok && e(0, s, a) == 1.0 / 6.0;
              for (int h = 1; h < 3; ++h)
                for (int s = 0; s < 3; ++s)
                  for (int a = 0; a < 2; ++a) {
                    const double want = (a == 0 && s < 2) ? 0.5 : 0.0;
                    ok = ok && e(h, s, a) == want;
                  }
              return {ok, "step 1 all 1/6; steps 2-3 (s1,a1) = (s2,a1) = 0.5",
                      "step 1 (s1,a1) = " + fmt(e(0, 0, 0)) + ", step 2 (s1,a1) = " + fmt(e(1, 0, 0))};
            });

  // Supporting structural checks.
  run_check(rep, "certificate-expert", 0, "the expert satisfies the Reset Cliff certificate with LHS 0",
            [&]() -> Outcome {
              const auto env = make_reset_cliff(3, 1, 2, 4, 12);
              const auto data = sample_trajectories(env.mdp, env.expert, 10, 13);
              const auto est = mle_estimate(data, 4, 2);
              const auto cert = approx_optimality_certificate(env.mdp, env.expert, est.dist(), 0.0);
              return {cert.lhs == 0.0 && cert.satisfied && cert.c_pi > 0.0, "LHS 0, c > 0, satisfied",
                      "LHS " + fmt(cert.lhs) + ", c " + fmt(cert.c_pi)};
            });
  run_check(rep, "mean-occupancy-identity", 0, "mixture of occupancies is the occupancy of its row-normalized policy",
            [&]() -> Outcome {
              double worst = 0.0;
              for (int i = 0; i < 10; ++i) {
                Rng r(derive_seed(14, {std::uint64_t(i)}));
                const auto env = make_random_mdp(4, 3, 4, false, r());
                const auto w = random_simplex_point(3, r);
                Tensor3 mix(4, 4, 3);
                for (int k = 0; k < 3; ++k) {
                  Tensor3 p(4, 4, 3);
                  for (int h = 0; h < 4; ++h)
                    for (int s = 0; s < 4; ++s) {
                      auto x = random_simplex_point(3, r);
                      for (int a = 0; a < 3; ++a) p(h, s, a) = x[a];
                    }
                  const Tensor3 occ = compute_occupancy(env.mdp, Policy(std::move(p))).dist();
                  for (std::size_t j = 0; j < mix.size(); ++j) mix.data()[j] += w[k] * occ.data()[j];
                }
                const Tensor3 back = compute_occupancy(env.mdp, mean_occupancy_policy(mix)).dist();
                for (std::size_t j = 0; j < mix.size(); ++j)
                  worst = std::max(worst, std::abs(back.data()[j] - mix.data()[j]));
              }
              return {worst <= 1e-10, "max deviation <= 1e-10", fmt(worst)};
            });
  run_check(rep, "state-dist-discrepancy", 0,
            "state-marginal gap bounded by accumulated policy disagreement on 50 random pairs", [&]() -> Outcome {
              int violations = 0;
              for (int i = 0; i < 50; ++i) {
                Rng r(derive_seed(15, {std::uint64_t(i)}));
                const int S = 2 + static_cast<int>(r.below(4)), A = 2 + static_cast<int>(r.below(2));
                const int H = 2 + static_cast<int>(r.below(4));
                const auto env = make_random_mdp(S, A, H, r.below(2) == 0, r());
                auto random_policy = [&] {
                  Tensor3 p(H, S, A);
                  for (int h = 0; h < H; ++h)
                    for (int s = 0; s < S; ++s) {
                      auto x = random_simplex_point(A, r);
                      for (int a = 0; a < A; ++a) p(h, s, a) = x[a];
                    }
                  return Policy(std::move(p));
                };
                const Policy p1 = random_policy(), p2 = random_policy();
                const auto m1 = state_marginal(compute_occupancy(env.mdp, p1).dist());
                const auto m2 = state_marginal(compute_occupancy(env.mdp, p2).dist());
                double acc = 0.0;
                for (int h = 1; h < H; ++h) {
                  for (int s = 0; s < S; ++s) {
                    double d = 0.0;
                    for (int a = 0; a < A; ++a) d += std::abs(p1.prob(h - 1, s, a) - p2.prob(h - 1, s, a));
                    acc += m2[h - 1][s] * d;
                  }
                  double lhs = 0.0;
                  for (int s = 0; s < S; ++s) lhs += std::abs(m1[h][s] - m2[h][s]);
                  if (lhs > acc + 1e-12) ++violations;
                }
              }
              return {violations == 0, "no violations", std::to_string(violations) + " violations"};
            });
  return rep;
}

json report_to_json(const VerifyReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"id", c.id},
                      {"criterion", c.criterion},
                      {"description", c.description},
                      {"passed", c.passed},
                      {"expected", c.expected},
                      {"observed", c.observed},
                      {"seconds", c.seconds}});
  return {{"all_passed", r.all_passed()}, {"checks", std::move(checks)}};
}

std::string report_table(const VerifyReport& r) {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-34s %-5s %-6s %8s  %s\n", "check", "crit", "result", "seconds", "observed");
  os << buf;
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof buf, "%-34s %-5s %-6s %8.2f  %s\n", c.id.c_str(),
                  c.criterion ? std::to_string(c.criterion).c_str() : "-", c.passed ? "PASS" : "FAIL", c.seconds,
                  c.observed.c_str());
    os << buf;
  }
  os << (r.all_passed() ? "all checks passed\n" : "some checks FAILED\n");
  return os.str();
}

}  // namespace imitlab
