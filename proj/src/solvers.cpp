#include "imitlab/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imitlab {

RewardWeights::RewardWeights(Tensor3 w) : w_(std::move(w)) {
  for (double x : w_.data())
    if (!(std::abs(x) <= 1.0 + 1e-12)) throw std::invalid_argument("RewardWeights: entry outside [-1, 1]");
}

RewardWeights RewardWeights::zeros(int horizon, int num_states, int num_actions) {
  return RewardWeights(Tensor3(horizon, num_states, num_actions, 0.0));
}

PlanResult value_iteration(const TransitionModel& model, std::span<const double> rho, const Tensor3& reward) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  if (!reward.same_shape(Tensor3(H, S, A)))
    throw std::invalid_argument("value_iteration: reward shape " + reward.shape_string() + " does not match model");
  if (rho.size() != static_cast<std::size_t>(S)) throw std::invalid_argument("value_iteration: rho length mismatch");
  std::vector<std::vector<int>> act(H, std::vector<int>(S, 0));
  std::vector<double> v(S, 0.0), v_next(S, 0.0), q(A);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double x = reward(h, s, a);
        if (h + 1 < H) {
          auto row = model.next(h, s, a);
          for (int s2 = 0; s2 < S; ++s2) x += row[s2] * v_next[s2];
        }
        q[a] = x;
      }
      const double best = *std::max_element(q.begin(), q.end());
      // Accept values within rounding of the max so that ties that are exact
      // in real arithmetic resolve to the lowest index.
      const double slack = 1e-12 * (1.0 + std::abs(best));
      int choice = 0;
      while (q[choice] < best - slack) ++choice;
      act[h][s] = choice;
      v[s] = q[choice];
    }
    v_next.swap(v);
  }
  double value = 0.0;
  for (int s = 0; s < S; ++s) value += rho[s] * v_next[s];
  return {Policy::deterministic(act, A), value};
}

PlanResult value_iteration(const TransitionModel& model, std::span<const double> rho, const RewardWeights& w) {
  return value_iteration(model, rho, w.values());
}

RewardWeights project_linf(const Tensor3& w) {
  Tensor3 out = w;
  for (double& x : out.data()) {
    if (std::isnan(x)) throw std::invalid_argument("project_linf: NaN entry");
    x = std::clamp(x, -1.0, 1.0);
  }
  return RewardWeights(std::move(out));
}

RewardWeights ogd_update(const RewardWeights& w, const Tensor3& grad, double eta) {
  if (!grad.same_shape(w.values())) throw std::invalid_argument("ogd_update: gradient shape mismatch");
  if (!(eta >= 0.0)) throw std::invalid_argument("ogd_update: step size must be nonnegative");
  Tensor3 z = w.values();
  for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] -= eta * grad.data()[i];
  return project_linf(z);
}

double linear_loss(const Tensor3& w, const Tensor3& occupancy, const Tensor3& est) {
  if (!w.same_shape(occupancy) || !w.same_shape(est)) throw std::invalid_argument("linear_loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w.data()[i] * (occupancy.data()[i] - est.data()[i]);
  return acc;
}

RegretAudit regret_audit(std::span<const TraceEntry> trace, const Tensor3& est) {
  if (trace.empty()) throw std::invalid_argument("regret_audit: empty trace");
  const double T = static_cast<double>(trace.size());
  double played = 0.0;
  std::vector<double> cbar(est.size(), 0.0);
  for (const auto& e : trace) {
    played += linear_loss(e.w, e.occupancy, est);
    for (std::size_t i = 0; i < cbar.size(); ++i) cbar[i] += e.occupancy.data()[i] - est.data()[i];
  }
  // min over the box of w . cbar is attained at w = -sign(cbar).
  double best_fixed = 0.0;
  for (double c : cbar) best_fixed -= std::abs(c);
  RegretAudit out;
  out.empirical_regret = (played - best_fixed) / T;
  const double H = static_cast<double>(est.dim0());
  out.bound = 2.0 * H * std::sqrt(2.0 * static_cast<double>(est.dim1() * est.dim2()) / T);
  out.within_bound = out.empirical_regret <= out.bound;
  return out;
}

TransitionModel fit_empirical_model(std::span<const TransitionSample> samples, int num_states, int num_actions,
                                    int horizon) {
  if (num_states < 1 || num_actions < 1 || horizon < 1)
    throw std::invalid_argument("fit_empirical_model: sizes must be positive");
  const int S = num_states, A = num_actions;
  const std::size_t rows = static_cast<std::size_t>(horizon - 1) * S * A;
  std::vector<double> counts(rows * S, 0.0);
  for (const auto& t : samples) {
    if (t.step < 0 || t.step + 1 >= horizon || t.state < 0 || t.state >= S || t.action < 0 || t.action >= A ||
        t.next_state < 0 || t.next_state >= S)
      throw std::invalid_argument("fit_empirical_model: sample out of range");
    counts[((static_cast<std::size_t>(t.step) * S + t.state) * A + t.action) * S + t.next_state] += 1.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double n = 0.0;
    for (int s2 = 0; s2 < S; ++s2) n += counts[r * S + s2];
    for (int s2 = 0; s2 < S; ++s2) counts[r * S + s2] = n > 0.0 ? counts[r * S + s2] / n : 1.0 / S;
  }
  return TransitionModel(S, A, horizon, std::move(counts), TransitionModel::Provenance::Empirical, kDerivedTol);
}

std::vector<TransitionSample> transitions_of(const TrajectoryDataset& data) {
  std::vector<TransitionSample> out;
  for (const auto& t : data.trajectories)
    for (std::size_t h = 0; h + 1 < t.length(); ++h)
      if (t.observed(h) && t.observed(h + 1))
        out.push_back({static_cast<int>(h), t.steps[h].state, t.steps[h].action, t.steps[h + 1].state});
  return out;
}

}  // namespace imitlab
