#pragma once

// Reference computations for tests. They follow different code paths from
// the library on purpose: occupancies by explicit trajectory enumeration,
// objectives and regrets from first principles.

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "imitlab/mdp.hpp"
#include "imitlab/solvers.hpp"

namespace oracle {

using imitlab::Policy;
using imitlab::TabularMDP;
using imitlab::Tensor3;
using imitlab::TransitionModel;

/// Occupancy by walking every trajectory prefix with positive probability.
inline Tensor3 path_occupancy(const TransitionModel& model, std::span<const double> rho, const Policy& pi) {
  const int S = model.num_states(), A = model.num_actions(), H = model.horizon();
  Tensor3 occ(H, S, A);
  std::function<void(int, int, double)> walk = [&](int h, int s, double p) {
    for (int a = 0; a < A; ++a) {
      const double q = p * pi.prob(h, s, a);
      if (q == 0.0) continue;
      occ(h, s, a) += q;
      if (h + 1 == H) continue;
      const auto next = model.next(h, s, a);
      for (int s2 = 0; s2 < S; ++s2)
        if (next[s2] > 0.0) walk(h + 1, s2, q * next[s2]);
    }
  };
  for (int s = 0; s < S; ++s)
    if (rho[s] > 0.0) walk(0, s, rho[s]);
  return occ;
}

inline Tensor3 path_occupancy(const TabularMDP& mdp, const Policy& pi) {
  return path_occupancy(mdp.model(), mdp.initial_dist(), pi);
}

inline double value(const TabularMDP& mdp, const Policy& pi) {
  const Tensor3 occ = path_occupancy(mdp, pi);
  double v = 0.0;
  for (std::size_t i = 0; i < occ.size(); ++i) v += occ.data()[i] * mdp.rewards().data()[i];
  return v;
}

inline double l1(const Tensor3& a, const Tensor3& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a.data()[i] - b.data()[i]);
  return d;
}

inline double objective(const TransitionModel& model, std::span<const double> rho, const Policy& pi,
                        const Tensor3& est) {
  return l1(path_occupancy(model, rho, pi), est);
}

inline double objective(const TabularMDP& mdp, const Policy& pi, const Tensor3& est) {
  return objective(mdp.model(), mdp.initial_dist(), pi, est);
}

/// Two-action policy with pi_h(a0|s) = x[h][s].
inline Policy two_action_policy(const std::vector<std::vector<double>>& x) {
  const int H = static_cast<int>(x.size()), S = static_cast<int>(x[0].size());
  Tensor3 p(H, S, 2);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      p(h, s, 0) = x[h][s];
      p(h, s, 1) = 1.0 - x[h][s];
    }
  return Policy(std::move(p));
}

/// Average regret of the reward player over a TAIL trace. The loss at round
/// t is w . (P_t - est); the best fixed w in hindsight is -sign of the summed
/// coefficients, so its average loss is -||mean(P_t - est)||_1.
inline double trace_regret(std::span<const imitlab::TraceEntry> trace, const Tensor3& est) {
  const double T = static_cast<double>(trace.size());
  double played = 0.0;
  std::vector<double> sum(est.size(), 0.0);
  for (const auto& e : trace)
    for (std::size_t i = 0; i < est.size(); ++i) {
      const double c = e.occupancy.data()[i] - est.data()[i];
      played += e.w.data()[i] * c;
      sum[i] += c;
    }
  double best = 0.0;
  for (double c : sum) best -= std::abs(c);
  return (played - best) / T;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sxx += (std::log(x) - mx) * (std::log(x) - mx);
    sxy += (std::log(x) - mx) * (std::log(y) - my);
  }
  return sxy / sxx;
}

}  // namespace oracle
