#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imitlab/envs.hpp"
#include "imitlab/estimators.hpp"
#include "imitlab/explore.hpp"
#include "imitlab/harness.hpp"
#include "imitlab/imitators.hpp"
#include "imitlab/io.hpp"

using namespace imitlab;

namespace {

EnvParams parse_params(const std::vector<std::string>& kvs) {
  EnvParams p;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--params expects key=value, got " + kv);
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "num_states" || k == "S")
      p.num_states = std::stoi(v);
    else if (k == "num_actions" || k == "A")
      p.num_actions = std::stoi(v);
    else if (k == "horizon" || k == "H")
      p.horizon = std::stoi(v);
    else if (k == "num_good")
      p.num_good = std::stoi(v);
    else if (k == "num_bad")
      p.num_bad = std::stoi(v);
    else if (k == "seed")
      p.seed = std::stoull(v);
    else if (k == "rho_mode")
      p.rho_mode = v;
    else if (k == "rho") {
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) p.rho.push_back(std::stod(item));
    } else
      throw std::invalid_argument("unknown parameter: " + k);
  }
  return p;
}

struct LoadedEnv {
  std::string family;
  TabularMDP mdp;
  Policy expert;
};

LoadedEnv load_env(const std::string& path) {
  const json j = load_json(path);
  return {j.value("family", std::string{}), mdp_from_json(j), policy_from_json(j.at("expert_policy"))};
}

DistributionEstimate default_mle(const TrajectoryDataset& data, int S, int A) {
  return data.fully_observed() ? mle_estimate(data, S, A) : masked_mle_estimate(data, S, A);
}

/// Adds value, gap, objective and, on valid Reset Cliff instances, the
/// certificate evaluated at `eps_ail`.
json result_json(const std::string& algorithm, const LoadedEnv& env, const Policy& pi, const Tensor3& est,
                 double eps_ail, const std::string& eps_source) {
  const double value = evaluate_policy(env.mdp.model(), env.mdp.initial_dist(), env.mdp.rewards(), pi);
  const double expert_value = evaluate_policy(env.mdp.model(), env.mdp.initial_dist(), env.mdp.rewards(), env.expert);
  json out = {{"algorithm", algorithm},
              {"policy", policy_to_json(pi)},
              {"value", value},
              {"expert_value", expert_value},
              {"gap", expert_value - value},
              {"objective", vail_objective(env.mdp.model(), env.mdp.initial_dist(), pi, est)},
              {"certificate", nullptr}};
  if (validate_reset_cliff(env.mdp, env.expert).passed) {
    try {
      const auto c = approx_optimality_certificate(env.mdp, pi, est, eps_ail);
      out["certificate"] = {{"c_pi", c.c_pi},           {"lhs", c.lhs},
                            {"eps_ail", c.eps_ail},     {"eps_ail_source", eps_source},
                            {"satisfied", c.satisfied}, {"last_step_set", c.last_step_set}};
    } catch (const std::exception& e) {
      out["certificate"] = {{"error", e.what()}};
    }
  }
  return out;
}

ExplorationStrategy make_strategy(const std::string& name, double bonus_scale, const TabularMDP& truth) {
  if (name == "oracle") return ExplorationStrategy::oracle(truth);
  if (name == "uniform") return ExplorationStrategy::uniform();
  if (name == "count-greedy") return ExplorationStrategy::count_greedy(bonus_scale);
  throw std::invalid_argument("unknown exploration strategy: " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular imitation learning laboratory"};
  app.require_subcommand(1);

  // gen-env
  std::string family, out, dataset_out;
  std::vector<std::string> params;
  std::size_t m = 10;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen-env", "Generate an environment and optionally an expert dataset");
  gen->add_option("--family", family, "Environment family")->required();
  gen->add_option("--params", params, "Family parameters as key=value");
  gen->add_option("--out", out, "Output env JSON")->required();
  gen->add_option("--dataset", dataset_out, "Also write an expert dataset (JSONL)");
  gen->add_option("--m", m, "Number of expert trajectories for --dataset");
  gen->add_option("--seed", seed, "Dataset sampling seed");

  // estimate
  std::string method = "mle", data_path, env_path;
  std::size_t nprime = 10000;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate the expert state-action distribution");
  est_cmd->add_option("--method", method, "mle, masked, mimic-md or mimic-md-mb")
      ->check(CLI::IsMember({"mle", "masked", "mimic-md", "mimic-md-mb"}));
  est_cmd->add_option("--data", data_path)->required();
  est_cmd->add_option("--env", env_path)->required();
  est_cmd->add_option("--nprime", nprime, "Rollouts for mimic-md-mb");
  est_cmd->add_option("--seed", seed);
  est_cmd->add_option("--out", out)->required();

  // learners
  std::string est_path, explore = "count-greedy";
  int T = 1000;
  double resolution = 0.02, bonus_scale = 1.0;
  std::size_t n = 10000;
  auto add_learner = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--env", env_path)->required();
    c->add_option("--data", data_path)->required();
    c->add_option("--est", est_path, "Precomputed estimate JSON");
    c->add_option("--T", T, "TAIL iterations");
    c->add_option("--seed", seed);
    c->add_option("--out", out)->required();
    return c;
  };
  auto* run_bc = add_learner("run-bc", "Behavioral cloning");
  auto* run_vail = add_learner("run-vail", "VAIL: closed form on Standard Imitation, grid search otherwise");
  run_vail->add_option("--resolution", resolution, "Grid resolution for the search");
  auto* run_tail = add_learner("run-tail", "TAIL on the true model");
  auto* run_mbtail = add_learner("run-mbtail", "MB-TAIL with reward-free exploration");
  run_mbtail->add_option("--explore", explore, "oracle, uniform or count-greedy")
      ->check(CLI::IsMember({"oracle", "uniform", "count-greedy"}));
  run_mbtail->add_option("--n", n, "Exploration episodes");
  run_mbtail->add_option("--nprime", nprime, "BC rollouts for the estimator");
  run_mbtail->add_option("--bonus-scale", bonus_scale, "CountGreedy bonus scale");

  // sweep and verify
  std::string config_path, stub_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a sample-complexity sweep");
  sweep_cmd->add_option("--config", config_path)->required();
  sweep_cmd->add_option("--out", out, "CSV path (overrides the config)");
  sweep_cmd->add_option("--gnuplot-stub", stub_path, "Also write a gnuplot script for the CSV");

  std::string fault;
  auto* verify_cmd = app.add_subcommand("verify", "Check the worked examples and structural properties");
  verify_cmd->add_option("--out", out, "Report JSON");
  verify_cmd->add_option("--inject-fault", fault, "Deliberately break one check")
      ->check(CLI::IsMember({"bandit-boundary"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      EnvSpec spec{family_from_name(family), parse_params(params)};
      const EnvInstance inst = make_env(spec);
      json j = mdp_to_json(inst.mdp);
      j["family"] = family_name(spec.family);
      j["expert_policy"] = policy_to_json(inst.expert);
      save_json(out, j);
      if (!dataset_out.empty()) {
        const TrajectoryDataset data = inst.dataset && !gen->count("--m")
                                           ? *inst.dataset
                                           : sample_trajectories(inst.mdp, inst.expert, m, seed);
        save_dataset(dataset_out, data);
      }
      return 0;
    }

    if (*est_cmd) {
      const LoadedEnv env = load_env(env_path);
      const TrajectoryDataset data = load_dataset(data_path);
      const int S = env.mdp.num_states(), A = env.mdp.num_actions();
      std::optional<DistributionEstimate> est;
      if (method == "mle")
        est = mle_estimate(data, S, A);
      else if (method == "masked")
        est = masked_mle_estimate(data, S, A);
      else if (method == "mimic-md")
        est = mimic_md_estimate(data, env.mdp, seed);
      else
        est = mimic_md_estimate_model_based(data, {S, A, env.mdp.horizon()},
                                            rollout_sampler_from(env_sampler_for(env.mdp)), nprime, seed);
      save_json(out, estimate_to_json(*est));
      return 0;
    }

    if (*run_bc || *run_vail || *run_tail || *run_mbtail) {
      const LoadedEnv env = load_env(env_path);
      const TrajectoryDataset data = load_dataset(data_path);
      const int S = env.mdp.num_states(), A = env.mdp.num_actions(), H = env.mdp.horizon();
      std::optional<DistributionEstimate> est;
      if (!est_path.empty()) est = estimate_from_json(load_json(est_path));
      json result;
      if (*run_bc) {
        if (!est) est = default_mle(data, S, A);
        const Policy pi = bc(data, S, A, H);
        const double f = vail_objective(env.mdp.model(), env.mdp.initial_dist(), pi, est->dist());
        result = result_json("bc", env, pi, est->dist(), f, "objective");
      } else if (*run_vail) {
        if (!est) est = default_mle(data, S, A);
        VailSolution sol = env.family == "standard-imitation"
                               ? vail_standard_imitation_exact(est->dist(), env.mdp.initial_dist(), seed)
                               : vail_bruteforce(env.mdp, est->dist(), resolution);
        result = result_json("vail", env, sol.policy, est->dist(), sol.lipschitz_slack, "grid-slack");
        json set = json::array();
        for (const auto& per_s : sol.optimal_set) {
          json row = json::array();
          for (const auto& iv : per_s) row.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"reached", iv.reached}});
          set.push_back(std::move(row));
        }
        result["optimal_set"] = std::move(set);
        result["optimal_objective"] = sol.objective_value;
      } else if (*run_tail) {
        if (!est)
          est = data.size() >= 2 && data.fully_observed() ? mimic_md_estimate(data, env.mdp, seed)
                                                          : default_mle(data, S, A);
        TailOptions opt;
        opt.iterations = T;
        opt.keep_trace = false;
        const TailResult tr = tail(env.mdp.model(), env.mdp.initial_dist(), est->dist(), opt);
        const double f = vail_objective(env.mdp.model(), env.mdp.initial_dist(), tr.policy, est->dist());
        result = result_json("tail", env, tr.policy, est->dist(), f - tr.best_dual_value, "duality-gap");
        result["best_dual_value"] = tr.best_dual_value;
        result["empirical_regret"] = tr.empirical_regret;
        result["regret_bound"] = tr.regret_bound;
        result["estimate_kind"] = kind_name(est->kind());
      } else {
        const auto strategy = make_strategy(explore, bonus_scale, env.mdp);
        const auto res = mb_tail(env_sampler_for(env.mdp), data, {S, A, H}, n, nprime, T, strategy, seed);
        const auto& d = res.diagnostics;
        const Tensor3& e = d.estimate.dist();
        // Suboptimality of the output on the true model, bounded through
        // a TAIL dual certificate computed on the true model.
        TailOptions opt;
        opt.iterations = T;
        opt.keep_trace = false;
        const double lower = tail(env.mdp.model(), env.mdp.initial_dist(), e, opt).best_dual_value;
        const double f = vail_objective(env.mdp.model(), env.mdp.initial_dist(), res.policy, e);
        result = result_json("mbtail", env, res.policy, e, f - lower, "duality-gap-true-model");
        result["diagnostics"] = {{"transitions_collected", d.transitions_collected},
                                 {"min_visit_count", d.min_visit_count},
                                 {"estimate_mass", d.estimate_mass},
                                 {"covered_fraction", d.covered_fraction},
                                 {"objective_under_model", d.objective_under_model},
                                 {"best_dual_value", d.best_dual_value},
                                 {"empirical_regret", d.empirical_regret},
                                 {"regret_bound", d.regret_bound},
                                 {"rho_hat", d.rho_hat}};
      }
      save_json(out, result);
      return 0;
    }

    if (*sweep_cmd) {
      SweepConfig c = sweep_config_from_json(load_json(config_path));
      if (!out.empty()) c.output = out;
      if (c.output.empty()) throw std::invalid_argument("sweep: no output path given");
      const auto rows = sweep(c);
      write_csv(c.output, rows);
      if (!stub_path.empty()) {
        std::ofstream f(stub_path);
        if (!f) throw std::runtime_error("cannot open " + stub_path);
        f << gnuplot_stub(c.output);
      }
      for (const auto& cell : summarize(rows))
        std::cout << "H=" << cell.H << " m=" << cell.m << " mean_gap=" << cell.mean_gap << " se=" << cell.std_error
                  << "\n";
      return 0;
    }

    if (*verify_cmd) {
      const VerifyReport rep = verify_paper_claims({fault});
      std::cout << report_table(rep);
      if (!out.empty()) save_json(out, report_to_json(rep));
      return rep.all_passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
