#include "imitlab/explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "imitlab/envs.hpp"

namespace imitlab {

EnvSampler env_sampler_for(const TabularMDP& mdp) {
  auto shared = std::make_shared<const TabularMDP>(mdp);
  return [shared](const Policy& pi, std::uint64_t seed) {
    Rng rng(seed);
    return sample_trajectory(*shared, pi, rng);
  };
}

ExplorationStrategy ExplorationStrategy::oracle(const TabularMDP& truth) {
  ExplorationStrategy s;
  s.kind = Kind::OracleModel;
  s.oracle_model = truth.model();
  s.oracle_rho = truth.initial_dist();
  return s;
}

ExplorationStrategy ExplorationStrategy::uniform() {
  ExplorationStrategy s;
  s.kind = Kind::UniformPolicy;
  return s;
}

ExplorationStrategy ExplorationStrategy::count_greedy(double bonus_scale) {
  ExplorationStrategy s;
  s.kind = Kind::CountGreedy;
  s.bonus_scale = bonus_scale;
  return s;
}

void ExplorationStrategy::validate() const {
  if (kind == Kind::OracleModel && !oracle_model)
    throw std::invalid_argument("ExplorationStrategy: oracle strategy carries no model");
  if (kind == Kind::CountGreedy && !(bonus_scale > 0.0))
    throw std::invalid_argument("ExplorationStrategy: bonus scale must be positive");
}

const char* strategy_name(ExplorationStrategy::Kind kind) {
  switch (kind) {
    case ExplorationStrategy::Kind::OracleModel: return "oracle";
    case ExplorationStrategy::Kind::UniformPolicy: return "uniform";
    case ExplorationStrategy::Kind::CountGreedy: return "count-greedy";
  }
  return "?";
}

namespace {

void record_episode(const Trajectory& t, ExplorationData& out, int H) {
  if (static_cast<int>(t.length()) != H) throw std::runtime_error("environment returned an episode of wrong length");
  out.initial_states.push_back(t.steps.front().state);
  for (int h = 0; h + 1 < H; ++h)
    out.transitions.push_back({h, t.steps[h].state, t.steps[h].action, t.steps[h + 1].state});
  out.episodes.push_back(t);
}

}  // namespace

ExplorationData collect(const EnvSampler& env_sampler, const ExplorationStrategy& strategy, std::size_t n,
                        ProblemDims dims, std::uint64_t seed) {
  strategy.validate();
  ExplorationData out;
  if (strategy.kind == ExplorationStrategy::Kind::OracleModel) {
    out.oracle_model = strategy.oracle_model;
    out.oracle_rho = strategy.oracle_rho;
    return out;
  }
  if (n < 1) throw std::invalid_argument("collect: n must be at least 1 for sampling strategies");
  if (!env_sampler) throw std::invalid_argument("collect: no environment sampler");
  const int S = dims.num_states, A = dims.num_actions, H = dims.horizon;
  out.transitions.reserve(n * static_cast<std::size_t>(std::max(H - 1, 0)));

  if (strategy.kind == ExplorationStrategy::Kind::UniformPolicy) {
    const Policy pi = Policy::uniform(H, S, A);
    for (std::size_t i = 0; i < n; ++i) record_episode(env_sampler(pi, derive_seed(seed, {i})), out, H);
    return out;
  }

  // CountGreedy: optimistic planning on the running empirical model.
  Tensor3 counts(H, S, A);
  std::vector<double> next_counts(static_cast<std::size_t>(std::max(H - 1, 0)) * S * A * S, 0.0);
  std::vector<double> first_counts(S, 0.0);
  Tensor3 bonus(H, S, A);
  std::vector<double> probs(next_counts.size());
  std::vector<double> rho_hat(S);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < bonus.size(); ++k)
      bonus.data()[k] = strategy.bonus_scale / std::sqrt(1.0 + counts.data()[k]);
    for (std::size_t row = 0; row < probs.size() / S; ++row) {
      double tot = 0.0;
      for (int s2 = 0; s2 < S; ++s2) tot += next_counts[row * S + s2];
      for (int s2 = 0; s2 < S; ++s2) probs[row * S + s2] = tot > 0.0 ? next_counts[row * S + s2] / tot : 1.0 / S;
    }
    const double seen = static_cast<double>(i);
    for (int s = 0; s < S; ++s) rho_hat[s] = i > 0 ? first_counts[s] / seen : 1.0 / S;
    TransitionModel model(S, A, H, probs, TransitionModel::Provenance::Empirical, kDerivedTol);
    const Policy pi = value_iteration(model, rho_hat, bonus).policy;
    const Trajectory t = env_sampler(pi, derive_seed(seed, {i}));
    record_episode(t, out, H);
    first_counts[t.steps.front().state] += 1.0;
    for (int h = 0; h < H; ++h) {
      counts(h, t.steps[h].state, t.steps[h].action) += 1.0;
      if (h + 1 < H)
        next_counts[((static_cast<std::size_t>(h) * S + t.steps[h].state) * A + t.steps[h].action) * S +
                    t.steps[h + 1].state] += 1.0;
    }
  }
  return out;
}

TransitionModel fit_model(const ExplorationData& data, ProblemDims dims) {
  if (data.oracle_model) return *data.oracle_model;
  return fit_empirical_model(data.transitions, dims.num_states, dims.num_actions, dims.horizon);
}

std::vector<double> initial_dist_estimate(const ExplorationData& data, int num_states) {
  if (data.oracle_model) return data.oracle_rho;
  if (data.initial_states.empty()) throw std::invalid_argument("initial_dist_estimate: no episodes collected");
  std::vector<double> rho(num_states, 0.0);
  for (int s : data.initial_states) rho.at(s) += 1.0;
  for (double& x : rho) x /= static_cast<double>(data.initial_states.size());
  return rho;
}

Tensor3 visit_counts(const ExplorationData& data, ProblemDims dims) {
  Tensor3 c(dims.horizon, dims.num_states, dims.num_actions);
  for (const auto& t : data.episodes)
    for (std::size_t h = 0; h < t.length(); ++h) c(h, t.steps[h].state, t.steps[h].action) += 1.0;
  return c;
}

double min_visit_count(const Tensor3& counts, const std::vector<std::vector<char>>& relevant) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < counts.dim0() && h < relevant.size(); ++h)
    for (std::size_t s = 0; s < counts.dim1(); ++s)
      if (relevant[h][s])
        for (double x : counts.row(h, s)) m = std::min(m, x);
  return std::isinf(m) ? 0.0 : m;
}

double model_quality(const TransitionModel& model, const TabularMDP& truth, std::size_t probe_policies,
                     std::uint64_t seed) {
  const int S = truth.num_states(), A = truth.num_actions(), H = truth.horizon();
  if (model.num_states() != S || model.num_actions() != A || model.horizon() != H)
    throw std::invalid_argument("model_quality: model shape does not match truth");
  if (probe_policies < 1) throw std::invalid_argument("model_quality: need at least one probe");
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < probe_policies; ++i) {
    Rng r = rng.split(i);
    Tensor3 probs(H, S, A), reward(H, S, A);
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s) {
        auto x = random_simplex_point(A, r);
        for (int a = 0; a < A; ++a) probs(h, s, a) = x[a];
      }
    for (double& x : reward.data()) x = r.uniform();
    const Policy pi(std::move(probs));
    const double vt = evaluate_policy(truth.model(), truth.initial_dist(), reward, pi);
    const double vm = evaluate_policy(model, truth.initial_dist(), reward, pi);
    worst = std::max(worst, std::abs(vt - vm));
  }
  return worst;
}

}  // namespace imitlab
