#include "imitlab/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace imitlab {

void check_distribution(std::span<const double> p, double tol, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument(what + ": entry is negative or not finite");
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol) {
    std::ostringstream os;
    os << what << ": sums to " << sum << ", not 1";
    throw std::invalid_argument(os.str());
  }
}

TransitionModel::TransitionModel(int num_states, int num_actions, int horizon, std::vector<double> probs,
                                 Provenance provenance, double tol)
    : S_(num_states), A_(num_actions), H_(horizon), probs_(std::move(probs)), provenance_(provenance) {
  if (S_ < 1 || A_ < 1 || H_ < 1) throw std::invalid_argument("TransitionModel: sizes must be positive");
  const std::size_t expected = static_cast<std::size_t>(H_ - 1) * S_ * A_ * S_;
  if (probs_.size() != expected)
    throw std::invalid_argument("TransitionModel: expected " + std::to_string(expected) + " entries, got " +
                                std::to_string(probs_.size()));
  for (int h = 0; h + 1 < H_; ++h)
    for (int s = 0; s < S_; ++s)
      for (int a = 0; a < A_; ++a)
        check_distribution(next(h, s, a), tol,
                           "transition row (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                               ", a=" + std::to_string(a) + ")");
}

bool TransitionModel::is_deterministic() const {
  for (double x : probs_)
    if (x != 0.0 && x != 1.0) return false;
  return true;
}

TabularMDP::TabularMDP(TransitionModel transitions, std::vector<double> initial_dist, Tensor3 rewards)
    : model_(std::move(transitions)), rho_(std::move(initial_dist)), rewards_(std::move(rewards)) {
  if (static_cast<int>(rho_.size()) != model_.num_states())
    throw std::invalid_argument("TabularMDP: initial_dist length does not match num_states");
  check_distribution(rho_, kConstructionTol, "initial_dist");
  if (!rewards_.same_shape(Tensor3(model_.horizon(), model_.num_states(), model_.num_actions())))
    throw std::invalid_argument("TabularMDP: rewards shape " + rewards_.shape_string() + " does not match (H, S, A)");
  for (double r : rewards_.data())
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("TabularMDP: reward outside [0, 1]");
}

TabularMDP TabularMDP::with_initial_dist(std::vector<double> rho) const {
  return TabularMDP(model_, std::move(rho), rewards_);
}

Policy::Policy(Tensor3 probs, double tol) : probs_(std::move(probs)) {
  if (probs_.dim0() < 1 || probs_.dim1() < 1 || probs_.dim2() < 1)
    throw std::invalid_argument("Policy: sizes must be positive");
  for (std::size_t h = 0; h < probs_.dim0(); ++h)
    for (std::size_t s = 0; s < probs_.dim1(); ++s)
      check_distribution(probs_.row(h, s), tol,
                         "policy row (h=" + std::to_string(h) + ", s=" + std::to_string(s) + ")");
}

Policy Policy::uniform(int horizon, int num_states, int num_actions) {
  return Policy(Tensor3(horizon, num_states, num_actions, 1.0 / num_actions));
}

Policy Policy::deterministic(const std::vector<std::vector<int>>& actions, int num_actions) {
  if (actions.empty() || actions.front().empty()) throw std::invalid_argument("Policy::deterministic: empty table");
  Tensor3 t(actions.size(), actions.front().size(), num_actions);
  for (std::size_t h = 0; h < actions.size(); ++h) {
    if (actions[h].size() != t.dim1()) throw std::invalid_argument("Policy::deterministic: ragged table");
    for (std::size_t s = 0; s < actions[h].size(); ++s) {
      const int a = actions[h][s];
      if (a < 0 || a >= num_actions) throw std::invalid_argument("Policy::deterministic: action out of range");
      t(h, s, a) = 1.0;
    }
  }
  return Policy(std::move(t));
}

Policy Policy::constant(int horizon, int num_states, int num_actions, int action) {
  return deterministic(std::vector<std::vector<int>>(horizon, std::vector<int>(num_states, action)), num_actions);
}

std::optional<int> Policy::deterministic_action(int h, int s) const {
  auto r = row(h, s);
  for (std::size_t a = 0; a < r.size(); ++a)
    if (r[a] == 1.0) return static_cast<int>(a);
  return std::nullopt;
}

OccupancyMeasure::OccupancyMeasure(Tensor3 dist, double tol) : dist_(std::move(dist)) {
  for (std::size_t h = 0; h < dist_.dim0(); ++h)
    check_distribution(dist_.slice(h), tol, "occupancy slice h=" + std::to_string(h));
}

bool TrajectoryDataset::fully_observed() const {
  for (const auto& t : trajectories)
    for (bool b : t.mask)
      if (!b) return false;
  return true;
}

void TrajectoryDataset::validate(int num_states, int num_actions) const {
  if (trajectories.empty()) return;
  const auto& first = trajectories.front();
  const std::size_t H = first.length();
  if (H == 0) throw std::invalid_argument("TrajectoryDataset: empty trajectory");
  auto pattern = [H](const Trajectory& t) {
    std::vector<bool> m(H);
    for (std::size_t h = 0; h < H; ++h) m[h] = t.observed(h);
    return m;
  };
  const auto ref = pattern(first);
  for (const auto& t : trajectories) {
    if (t.length() != H) throw std::invalid_argument("TrajectoryDataset: trajectories have different horizons");
    if (!t.mask.empty() && t.mask.size() != H) throw std::invalid_argument("TrajectoryDataset: mask length mismatch");
    if (pattern(t) != ref) throw std::invalid_argument("TrajectoryDataset: trajectories have different mask patterns");
    for (const auto& sa : t.steps) {
      if (sa.state < 0 || sa.action < 0) throw std::invalid_argument("TrajectoryDataset: negative index");
      if (num_states >= 0 && sa.state >= num_states)
        throw std::invalid_argument("TrajectoryDataset: state index out of range");
      if (num_actions >= 0 && sa.action >= num_actions)
        throw std::invalid_argument("TrajectoryDataset: action index out of range");
    }
  }
}

namespace {

void check_policy_dims(const TransitionModel& model, std::size_t rho_size, const Policy& pi) {
  if (pi.horizon() != model.horizon() || pi.num_states() != model.num_states() ||
      pi.num_actions() != model.num_actions())
    throw std::invalid_argument("policy shape " + pi.probs().shape_string() + " does not match model (H=" +
                                std::to_string(model.horizon()) + ", S=" + std::to_string(model.num_states()) +
                                ", A=" + std::to_string(model.num_actions()) + ")");
  if (rho_size != static_cast<std::size_t>(model.num_states()))
    throw std::invalid_argument("initial distribution length does not match num_states");
}

}  // namespace

Tensor3 occupancy_tensor(const TransitionModel& model, std::span<const double> rho, const Policy& pi) {
  check_policy_dims(model, rho.size(), pi);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  Tensor3 occ(H, S, A);
  std::vector<double> state(rho.begin(), rho.end()), next(S);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) occ(h, s, a) = state[s] * pi.prob(h, s, a);
    if (h + 1 == H) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double w = occ(h, s, a);
        if (w == 0.0) continue;
        auto row = model.next(h, s, a);
        for (int s2 = 0; s2 < S; ++s2) next[s2] += w * row[s2];
      }
    state.swap(next);
  }
  return occ;
}

OccupancyMeasure compute_occupancy(const TabularMDP& mdp, const Policy& pi) {
  return OccupancyMeasure(occupancy_tensor(mdp.model(), mdp.initial_dist(), pi));
}

double evaluate_policy(const TransitionModel& model, std::span<const double> rho, const Tensor3& reward,
                       const Policy& pi) {
  check_policy_dims(model, rho.size(), pi);
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  if (!reward.same_shape(pi.probs())) throw std::invalid_argument("evaluate_policy: reward shape mismatch");
  std::vector<double> v(S, 0.0), v_prev(S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double acc = 0.0;
      for (int a = 0; a < A; ++a) {
        const double p = pi.prob(h, s, a);
        if (p == 0.0) continue;
        double q = reward(h, s, a);
        if (h + 1 < H) {
          auto row = model.next(h, s, a);
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * v_prev[s2];
        }
        acc += p * q;
      }
      v[s] = acc;
    }
    v_prev.swap(v);
  }
  double total = 0.0;
  for (int s = 0; s < S; ++s) total += rho[s] * v_prev[s];
  return total;
}

double policy_value(const TabularMDP& mdp, const Policy& pi) {
  return evaluate_policy(mdp.model(), mdp.initial_dist(), mdp.rewards(), pi);
}

double value_gap(const TabularMDP& mdp, const Policy& expert, const Policy& learner) {
  return policy_value(mdp, expert) - policy_value(mdp, learner);
}

Trajectory sample_trajectory(const TabularMDP& mdp, const Policy& pi, Rng& rng) {
  check_policy_dims(mdp.model(), mdp.initial_dist().size(), pi);
  const int H = mdp.horizon();
  Trajectory t;
  t.steps.reserve(H);
  int s = static_cast<int>(rng.categorical(mdp.initial_dist()));
  for (int h = 0; h < H; ++h) {
    const int a = static_cast<int>(rng.categorical(pi.row(h, s)));
    t.steps.push_back({s, a});
    if (h + 1 < H) s = static_cast<int>(rng.categorical(mdp.model().next(h, s, a)));
  }
  t.mask.assign(H, true);
  return t;
}

TrajectoryDataset sample_trajectories(const TabularMDP& mdp, const Policy& pi, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("sample_trajectories: m must be at least 1");
  TrajectoryDataset d;
  d.trajectories.reserve(m);
  Rng root(seed);
  for (std::size_t i = 0; i < m; ++i) {
    Rng r = root.split(i);
    d.trajectories.push_back(sample_trajectory(mdp, pi, r));
  }
  d.seed_provenance = "seed=" + std::to_string(seed) + " m=" + std::to_string(m);
  return d;
}

L1Distance l1_distance(const Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("l1_distance: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  L1Distance out;
  out.per_h.assign(a.dim0(), 0.0);
  for (std::size_t h = 0; h < a.dim0(); ++h) {
    auto x = a.slice(h), y = b.slice(h);
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
    out.per_h[h] = d;
    out.total += d;
  }
  return out;
}

StateDist state_marginal(const Tensor3& occ) {
  StateDist m(occ.dim0(), std::vector<double>(occ.dim1(), 0.0));
  for (std::size_t h = 0; h < occ.dim0(); ++h)
    for (std::size_t s = 0; s < occ.dim1(); ++s)
      for (double x : occ.row(h, s)) m[h][s] += x;
  return m;
}

std::vector<std::vector<char>> reachable_states(const TransitionModel& model, std::span<const double> rho) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  std::vector<std::vector<char>> r(H, std::vector<char>(S, 0));
  for (int s = 0; s < S; ++s) r[0][s] = rho[s] > 0.0;
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s) {
      if (!r[h][s]) continue;
      for (int a = 0; a < A; ++a) {
        auto row = model.next(h, s, a);
        for (int s2 = 0; s2 < S; ++s2)
          if (row[s2] > 0.0) r[h + 1][s2] = 1;
      }
    }
  return r;
}

double inner(const Tensor3& x, const Tensor3& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("inner: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x.data()[i] * y.data()[i];
  return acc;
}

}  // namespace imitlab
