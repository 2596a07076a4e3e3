#include "imitlab/imitators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace imitlab {

double vail_objective(const TransitionModel& model, std::span<const double> rho, const Policy& pi, const Tensor3& est) {
  const Tensor3 occ = occupancy_tensor(model, rho, pi);
  if (!occ.same_shape(est))
    throw std::invalid_argument("vail_objective: estimate shape " + est.shape_string() + " does not match " +
                                occ.shape_string());
  return l1_distance(occ, est).total;
}

double vail_objective(const TabularMDP& mdp, const Policy& pi, const DistributionEstimate& est) {
  return vail_objective(mdp.model(), mdp.initial_dist(), pi, est.dist());
}

Policy bc(const TrajectoryDataset& data, int num_states, int num_actions, int horizon) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) throw std::invalid_argument("bc: sizes must be positive");
  if (data.empty()) return Policy::uniform(horizon, num_states, num_actions);
  data.validate(num_states, num_actions);
  if (data.horizon() != horizon) throw std::invalid_argument("bc: dataset horizon does not match");
  const CoverageSets cov = CoverageSets::from_dataset(data, num_states);
  if (cov.has_conflict()) throw std::invalid_argument("bc: dataset records two actions at one (h, s)");
  return bc_from_coverage(cov, num_actions);
}

// ---------------------------------------------------------------------------
// Grid search

namespace {

enum class RowKind { Fixed, Irrelevant, Local, Coupled };

/// All compositions of n into k parts, as probability vectors.
std::vector<std::vector<double>> simplex_grid(int k, int n) {
  std::vector<std::vector<double>> out;
  std::vector<int> c(k, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == k - 1) {
      c[i] = left;
      std::vector<double> p(k);
      for (int j = 0; j < k; ++j) p[j] = static_cast<double>(c[j]) / n;
      out.push_back(std::move(p));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, n);
  return out;
}

class GridSearch {
 public:
  GridSearch(const TransitionModel& model, std::span<const double> rho, const Tensor3& est,
             const BruteforceOptions& opt)
      : M_(model), rho_(rho.begin(), rho.end()), est_(est), opt_(opt), H_(model.horizon()), S_(model.num_states()),
        A_(model.num_actions()) {
    if (!est.same_shape(Tensor3(H_, S_, A_))) throw std::invalid_argument("vail_bruteforce: estimate shape mismatch");
    if (rho_.size() != static_cast<std::size_t>(S_)) throw std::invalid_argument("vail_bruteforce: rho length mismatch");
    if (!(opt.resolution > 0.0 && opt.resolution <= 1.0))
      throw std::invalid_argument("vail_bruteforce: resolution must be in (0, 1]");
    const double steps = 1.0 / opt.resolution;
    N_ = static_cast<int>(std::lround(steps));
    if (std::abs(steps - N_) > 1e-6) throw std::invalid_argument("vail_bruteforce: 1/resolution must be an integer");
    grid_ = simplex_grid(A_, N_);

    ref_.assign(H_, std::vector<int>(S_, 0));
    if (!opt.reference_action.empty()) ref_ = opt.reference_action;
    fixed_.assign(H_, std::vector<char>(S_, 0));
    if (!opt.fixed_mask.empty()) {
      if (!opt.fixed_rows) throw std::invalid_argument("vail_bruteforce: fixed_mask given without fixed_rows");
      fixed_ = opt.fixed_mask;
    }
    classify();
  }

  VailSolution run() {
    // Pass 1: the minimum and the first configuration attaining it.
    pass_ = 1;
    best_ = std::numeric_limits<double>::infinity();
    depth_m_.assign(H_ + 1, std::vector<double>(S_, 0.0));
    depth_m_[0] = rho_;
    step(0, 0.0);
    // Pass 2: every configuration within tolerance of the minimum.
    pass_ = 2;
    lo_.assign(H_, std::vector<double>(S_, std::numeric_limits<double>::infinity()));
    hi_.assign(H_, std::vector<double>(S_, -std::numeric_limits<double>::infinity()));
    count_ = 0.0;
    step(0, 0.0);

    VailSolution sol;
    sol.objective_value = best_;
    sol.optimal_point_count = count_;
    sol.lipschitz_slack = opt_.resolution * 2.0 * H_ * S_ * A_;
    sol.optimal_set.assign(H_, std::vector<ActionInterval>(S_));
    for (int h = 0; h < H_; ++h)
      for (int s = 0; s < S_; ++s) {
        auto& iv = sol.optimal_set[h][s];
        if (lo_[h][s] <= hi_[h][s]) {
          iv = {lo_[h][s], hi_[h][s], true};
        } else {
          iv = {0.0, 1.0, false};
        }
      }
    sol.policy = build_policy();
    return sol;
  }

 private:
  void classify() {
    // Reachability honours fixed rows: only their supported actions move mass.
    std::vector<std::vector<char>> reach(H_, std::vector<char>(S_, 0));
    for (int s = 0; s < S_; ++s) reach[0][s] = rho_[s] > 0.0;
    for (int h = 0; h + 1 < H_; ++h)
      for (int s = 0; s < S_; ++s) {
        if (!reach[h][s]) continue;
        for (int a = 0; a < A_; ++a) {
          if (fixed_[h][s] && opt_.fixed_rows->prob(h, s, a) == 0.0) continue;
          auto row = M_.next(h, s, a);
          for (int s2 = 0; s2 < S_; ++s2)
            if (row[s2] > 0.0) reach[h + 1][s2] = 1;
        }
      }
    kind_.assign(H_, std::vector<RowKind>(S_, RowKind::Coupled));
    coupled_.assign(H_, {});
    double configs = 1.0;
    int dims = 0;
    for (int h = 0; h < H_; ++h)
      for (int s = 0; s < S_; ++s) {
        RowKind k;
        if (fixed_[h][s])
          k = RowKind::Fixed;
        else if (!reach[h][s])
          k = RowKind::Irrelevant;
        else if (h + 1 == H_ || rows_identical(h, s))
          k = RowKind::Local;
        else
          k = RowKind::Coupled;
        kind_[h][s] = k;
        if (k == RowKind::Coupled) {
          coupled_[h].push_back(s);
          dims += A_ - 1;
          configs *= static_cast<double>(grid_.size());
        }
      }
    if (dims > opt_.max_coupled_dims)
      throw std::invalid_argument("vail_bruteforce: instance too large (" + std::to_string(dims) +
                                  " coupled grid dimensions, limit " + std::to_string(opt_.max_coupled_dims) + ")");
    if (configs > opt_.max_configurations)
      throw std::invalid_argument("vail_bruteforce: instance too large (grid has " + std::to_string(configs) +
                                  " coupled configurations)");
    // Per coupled row and grid point: the next-state law.
    flow_.assign(H_, std::vector<std::vector<std::vector<double>>>(S_));
    for (int h = 0; h + 1 < H_; ++h)
      for (int s : coupled_[h]) {
        auto& f = flow_[h][s];
        f.assign(grid_.size(), std::vector<double>(S_, 0.0));
        for (std::size_t g = 0; g < grid_.size(); ++g)
          for (int a = 0; a < A_; ++a) {
            if (grid_[g][a] == 0.0) continue;
            auto row = M_.next(h, s, a);
            for (int s2 = 0; s2 < S_; ++s2) f[g][s2] += grid_[g][a] * row[s2];
          }
      }
    choice_.assign(H_, std::vector<int>(S_, -1));
    best_choice_ = choice_;
    local_cost_.assign(H_, std::vector<std::vector<double>>(S_));
    local_min_.assign(H_, std::vector<double>(S_, 0.0));
    coupled_cost_.assign(H_, std::vector<std::vector<double>>(S_));
    base_flow_.assign(H_, std::vector<double>(S_, 0.0));
  }

  bool rows_identical(int h, int s) const {
    auto r0 = M_.next(h, s, 0);
    for (int a = 1; a < A_; ++a) {
      auto r = M_.next(h, s, a);
      for (int s2 = 0; s2 < S_; ++s2)
        if (r[s2] != r0[s2]) return false;
    }
    return true;
  }

  double row_cost(int h, int s, double mass, std::span<const double> pi) const {
    double c = 0.0;
    for (int a = 0; a < A_; ++a) c += std::abs(mass * pi[a] - est_(h, s, a));
    return c;
  }

  void step(int h, double acc) {
    if (h == H_) {
      leaf(acc);
      return;
    }
    const auto& m = depth_m_[h];
    double base = 0.0;
    auto& flow = base_flow_[h];
    std::fill(flow.begin(), flow.end(), 0.0);
    const bool last = h + 1 == H_;
    for (int s = 0; s < S_; ++s) {
      switch (kind_[h][s]) {
        case RowKind::Fixed: {
          auto pi = opt_.fixed_rows->row(h, s);
          base += row_cost(h, s, m[s], pi);
          if (!last && m[s] != 0.0)
            for (int a = 0; a < A_; ++a) {
              if (pi[a] == 0.0) continue;
              auto row = M_.next(h, s, a);
              for (int s2 = 0; s2 < S_; ++s2) flow[s2] += m[s] * pi[a] * row[s2];
            }
          break;
        }
        case RowKind::Irrelevant:
          for (int a = 0; a < A_; ++a) base += est_(h, s, a);
          break;
        case RowKind::Local: {
          auto& costs = local_cost_[h][s];
          costs.resize(grid_.size());
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t g = 0; g < grid_.size(); ++g) {
            costs[g] = row_cost(h, s, m[s], grid_[g]);
            best = std::min(best, costs[g]);
          }
          local_min_[h][s] = best;
          base += best;
          if (!last && m[s] != 0.0) {
            auto row = M_.next(h, s, 0);
            for (int s2 = 0; s2 < S_; ++s2) flow[s2] += m[s] * row[s2];
          }
          break;
        }
        case RowKind::Coupled: {
          auto& costs = coupled_cost_[h][s];
          costs.resize(grid_.size());
          for (std::size_t g = 0; g < grid_.size(); ++g) costs[g] = row_cost(h, s, m[s], grid_[g]);
          break;
        }
      }
    }
    enumerate(h, 0, acc + base);
  }

  void enumerate(int h, std::size_t k, double acc) {
    const auto& cs = coupled_[h];
    if (k == cs.size()) {
      if (h + 1 < H_) {
        auto& next = depth_m_[h + 1];
        next = base_flow_[h];
        for (int s : cs) {
          const double ms = depth_m_[h][s];
          if (ms == 0.0) continue;
          const auto& f = flow_[h][s][choice_[h][s]];
          for (int s2 = 0; s2 < S_; ++s2) next[s2] += ms * f[s2];
        }
      }
      step(h + 1, acc);
      return;
    }
    const int s = cs[k];
    const auto& costs = coupled_cost_[h][s];
    // Pass 1 prunes: costs are nonnegative, so a partial sum above the best
    // cannot finish below it.
    for (std::size_t g = 0; g < grid_.size(); ++g) {
      const double v = acc + costs[g];
      if (pass_ == 1 && v > best_) continue;
      if (pass_ == 2 && v > best_ + opt_.tie_tol) continue;
      choice_[h][s] = static_cast<int>(g);
      enumerate(h, k + 1, v);
    }
  }

  void leaf(double total) {
    if (pass_ == 1) {
      if (total < best_) {
        best_ = total;
        best_choice_ = choice_;
        for (int h = 0; h < H_; ++h)
          for (int s = 0; s < S_; ++s)
            if (kind_[h][s] == RowKind::Local) best_choice_[h][s] = first_min(h, s);
      }
      return;
    }
    const double slack = best_ + opt_.tie_tol - total;
    if (slack < 0.0) return;
    double points = 1.0;
    for (int h = 0; h < H_; ++h)
      for (int s = 0; s < S_; ++s) {
        if (!(depth_m_[h][s] > 1e-14)) continue;
        const int ref = ref_[h][s];
        switch (kind_[h][s]) {
          case RowKind::Fixed:
            widen(h, s, opt_.fixed_rows->prob(h, s, ref));
            break;
          case RowKind::Coupled:
            widen(h, s, grid_[choice_[h][s]][ref]);
            break;
          case RowKind::Local: {
            int n = 0;
            const auto& costs = local_cost_[h][s];
            for (std::size_t g = 0; g < grid_.size(); ++g)
              if (costs[g] - local_min_[h][s] <= slack) {
                widen(h, s, grid_[g][ref]);
                ++n;
              }
            points *= n;
            break;
          }
          case RowKind::Irrelevant:
            break;
        }
      }
    count_ += points;
  }

  int first_min(int h, int s) const {
    const auto& costs = local_cost_[h][s];
    for (std::size_t g = 0; g < costs.size(); ++g)
      if (costs[g] == local_min_[h][s]) return static_cast<int>(g);
    return 0;
  }

  void widen(int h, int s, double x) {
    lo_[h][s] = std::min(lo_[h][s], x);
    hi_[h][s] = std::max(hi_[h][s], x);
  }

  Policy build_policy() const {
    Tensor3 t(H_, S_, A_, 1.0 / A_);
    for (int h = 0; h < H_; ++h)
      for (int s = 0; s < S_; ++s) {
        std::span<const double> row;
        if (kind_[h][s] == RowKind::Fixed)
          row = opt_.fixed_rows->row(h, s);
        else if (kind_[h][s] != RowKind::Irrelevant && best_choice_[h][s] >= 0)
          row = grid_[best_choice_[h][s]];
        else
          continue;
        for (int a = 0; a < A_; ++a) t(h, s, a) = row[a];
      }
    return Policy(std::move(t));
  }

  const TransitionModel& M_;
  std::vector<double> rho_;
  const Tensor3& est_;
  BruteforceOptions opt_;
  int H_, S_, A_;
  int N_ = 1;
  std::vector<std::vector<double>> grid_;
  std::vector<std::vector<int>> ref_;
  std::vector<std::vector<char>> fixed_;
  std::vector<std::vector<RowKind>> kind_;
  std::vector<std::vector<int>> coupled_;
  std::vector<std::vector<std::vector<std::vector<double>>>> flow_;
  std::vector<std::vector<double>> depth_m_;
  std::vector<std::vector<double>> base_flow_;
  std::vector<std::vector<std::vector<double>>> local_cost_;
  std::vector<std::vector<double>> local_min_;
  std::vector<std::vector<std::vector<double>>> coupled_cost_;
  std::vector<std::vector<int>> choice_, best_choice_;
  std::vector<std::vector<double>> lo_, hi_;
  double best_ = 0.0;
  double count_ = 0.0;
  int pass_ = 1;
};

}  // namespace

VailSolution vail_bruteforce(const TransitionModel& model, std::span<const double> rho, const Tensor3& est,
                             const BruteforceOptions& options) {
  GridSearch search(model, rho, est, options);
  return search.run();
}

VailSolution vail_bruteforce(const TabularMDP& mdp, const Tensor3& est, double resolution) {
  BruteforceOptions opt;
  opt.resolution = resolution;
  return vail_bruteforce(mdp.model(), mdp.initial_dist(), est, opt);
}

// ---------------------------------------------------------------------------
// Standard Imitation closed form

Policy interval_policy(const std::vector<std::vector<ActionInterval>>& intervals, int num_actions, double t,
                       int reference_action) {
  if (intervals.empty() || intervals.front().empty()) throw std::invalid_argument("interval_policy: empty descriptor");
  if (reference_action < 0 || reference_action >= num_actions)
    throw std::invalid_argument("interval_policy: reference action out of range");
  const std::size_t H = intervals.size(), S = intervals.front().size();
  Tensor3 p(H, S, num_actions);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < S; ++s) {
      const auto& iv = intervals[h][s];
      const double x = num_actions == 1 ? 1.0 : iv.lo + t * (iv.hi - iv.lo);
      for (int a = 0; a < num_actions; ++a)
        p(h, s, a) = a == reference_action ? x : (1.0 - x) / (num_actions - 1);
    }
  return Policy(std::move(p));
}

VailSolution vail_standard_imitation_exact(const Tensor3& est, std::span<const double> rho, std::uint64_t seed) {
  const int H = static_cast<int>(est.dim0()), S = static_cast<int>(est.dim1()), A = static_cast<int>(est.dim2());
  if (rho.size() != static_cast<std::size_t>(S)) throw std::invalid_argument("vail_standard_imitation_exact: rho length");
  check_distribution(rho, kConstructionTol, "vail_standard_imitation_exact: rho");
  VailSolution sol;
  sol.sampling_seed = seed;
  sol.optimal_set.assign(H, std::vector<ActionInterval>(S));
  for (int h = 0; h < H; ++h) {
    double mass = 0.0;
    for (double x : est.slice(h)) {
      if (!(x >= 0.0)) throw std::invalid_argument("vail_standard_imitation_exact: negative estimate entry");
      mass += x;
    }
    if (std::abs(mass - 1.0) > kDerivedTol)
      throw std::invalid_argument("vail_standard_imitation_exact: estimate slice h=" + std::to_string(h) +
                                  " is not normalized");
    for (int s = 0; s < S; ++s) {
      for (int a = 1; a < A; ++a)
        if (est(h, s, a) != 0.0)
          throw std::invalid_argument("vail_standard_imitation_exact: estimate has mass on a non-expert action");
      const double p = est(h, s, 0);
      if (rho[s] == 0.0 && p > 0.0)
        throw std::invalid_argument("vail_standard_imitation_exact: estimate has mass on a state with rho = 0");
      auto& iv = sol.optimal_set[h][s];
      iv.reached = rho[s] > 0.0;
      if (p < rho[s]) {
        iv.lo = p / rho[s];
        iv.hi = 1.0;
      } else {
        iv.lo = iv.hi = 1.0;
      }
    }
  }
  // One uniform draw per (h, s) from the product of intervals.
  Rng rng(seed);
  Tensor3 probs(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      const auto& iv = sol.optimal_set[h][s];
      const double u = rng.uniform();
      const double x = A == 1 ? 1.0 : iv.lo + u * (iv.hi - iv.lo);
      for (int a = 0; a < A; ++a) probs(h, s, a) = a == 0 ? x : (1.0 - x) / (A - 1);
    }
  sol.policy = Policy(std::move(probs));
  double obj = 0.0;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) obj += std::abs(rho[s] * sol.policy.prob(h, s, a) - est(h, s, a));
  sol.objective_value = obj;
  return sol;
}

// ---------------------------------------------------------------------------
// TAIL

double default_eta(int num_states, int num_actions, int T) {
  return std::sqrt(static_cast<double>(num_states) * num_actions / (8.0 * T));
}

Policy mean_occupancy_policy(const Tensor3& pbar) {
  const std::size_t H = pbar.dim0(), S = pbar.dim1(), A = pbar.dim2();
  Tensor3 p(H, S, A);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < S; ++s) {
      auto row = pbar.row(h, s);
      double tot = 0.0;
      for (double x : row) {
        if (!(x >= 0.0)) throw std::invalid_argument("mean_occupancy_policy: negative or NaN entry");
        tot += x;
      }
      for (std::size_t a = 0; a < A; ++a) p(h, s, a) = tot > 0.0 ? row[a] / tot : 1.0 / static_cast<double>(A);
    }
  return Policy(std::move(p));
}

TailResult tail(const TransitionModel& model, std::span<const double> rho, const Tensor3& est,
                const TailOptions& options) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  const int T = options.iterations;
  if (T < 1) throw std::invalid_argument("tail: T must be at least 1");
  if (!est.same_shape(Tensor3(H, S, A)))
    throw std::invalid_argument("tail: estimate shape " + est.shape_string() + " does not match model");
  if (rho.size() != static_cast<std::size_t>(S)) throw std::invalid_argument("tail: rho length mismatch");
  RewardWeights w = options.w_init ? *options.w_init : RewardWeights::zeros(H, S, A);
  if (!w.values().same_shape(est)) throw std::invalid_argument("tail: initial weights shape mismatch");

  TailResult out;
  Tensor3 sum(H, S, A);
  double played = 0.0;
  out.best_dual_value = -std::numeric_limits<double>::infinity();
  if (options.keep_trace) out.trace.reserve(T);
  for (int t = 1; t <= T; ++t) {
    PlanResult br = value_iteration(model, rho, w);
    Tensor3 occ = occupancy_tensor(model, rho, br.policy);
    const double dual = inner(w.values(), est) - br.value;
    out.best_dual_value = std::max(out.best_dual_value, dual);
    played += linear_loss(w.values(), occ, est);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += occ.data()[i];
    Tensor3 grad = occ;
    for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] -= est.data()[i];
    const double eta = options.eta ? options.eta(t, T) : default_eta(S, A, T);
    RewardWeights next = ogd_update(w, grad, eta);
    if (options.keep_trace) out.trace.push_back({w.values(), std::move(occ), br.value, dual});
    w = std::move(next);
  }
  for (double& x : sum.data()) x /= T;
  double best_fixed = 0.0;
  for (std::size_t i = 0; i < sum.size(); ++i) best_fixed -= std::abs(sum.data()[i] - est.data()[i]);
  out.empirical_regret = played / T - best_fixed;
  out.regret_bound = 2.0 * H * std::sqrt(2.0 * S * A / static_cast<double>(T));
  out.mean_occupancy = std::move(sum);
  out.policy = mean_occupancy_policy(out.mean_occupancy);
  return out;
}

// ---------------------------------------------------------------------------
// MB-TAIL

std::uint64_t mb_tail_stage_seed(std::uint64_t seed, std::uint64_t stage) { return Rng(seed).split(stage).key(); }

RolloutSampler rollout_sampler_from(const EnvSampler& env_sampler) {
  return [env_sampler](const Policy& pi, std::size_t n, std::uint64_t seed) {
    TrajectoryDataset d;
    d.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i) d.trajectories.push_back(env_sampler(pi, derive_seed(seed, {i})));
    d.seed_provenance = "rollouts seed=" + std::to_string(seed);
    return d;
  };
}

MbTailResult mb_tail(const EnvSampler& env_sampler, const TrajectoryDataset& data, ProblemDims dims, std::size_t n,
                     std::size_t n_prime, int T, const ExplorationStrategy& exploration, std::uint64_t seed) {
  if (data.size() < 2) throw std::invalid_argument("mb_tail: need at least 2 expert trajectories");
  if (!env_sampler) throw std::invalid_argument("mb_tail: no environment sampler");
  const int S = dims.num_states, A = dims.num_actions, H = dims.horizon;
  DistributionEstimate est = mimic_md_estimate_model_based(data, dims, rollout_sampler_from(env_sampler), n_prime,
                                                           mb_tail_stage_seed(seed, 0));
  ExplorationData explored = collect(env_sampler, exploration, n, dims, mb_tail_stage_seed(seed, 1));
  TransitionModel model = fit_model(explored, dims);
  std::vector<double> rho_hat = initial_dist_estimate(explored, S);

  TailOptions topt;
  topt.iterations = T;
  topt.keep_trace = false;
  TailResult tr = tail(model, rho_hat, est.dist(), topt);

  MbTailDiagnostics diag{est, model, rho_hat, 0, 0.0, {}, 0.0, 0.0, 0.0, 0.0, 0.0};
  diag.transitions_collected = explored.transitions.size();
  if (!explored.oracle_model) {
    const Tensor3 counts = visit_counts(explored, dims);
    std::vector<std::vector<char>> seen(H, std::vector<char>(S, 0));
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          if (counts(h, s, a) > 0.0) seen[h][s] = 1;
    diag.min_visit_count = min_visit_count(counts, seen);
  }
  for (int h = 0; h < H; ++h) {
    double mass = 0.0;
    for (double x : est.dist().slice(h)) mass += x;
    diag.estimate_mass.push_back(mass);
  }
  const auto& split = *est.split_record();
  std::size_t covered = 0;
  for (auto i : split.d1c_indices)
    if (prefix_covered(data.trajectories[i], split.coverage, H - 1)) ++covered;
  diag.covered_fraction = split.d1c_indices.empty() ? 0.0 : static_cast<double>(covered) / split.d1c_indices.size();
  diag.objective_under_model = vail_objective(model, rho_hat, tr.policy, est.dist());
  diag.best_dual_value = tr.best_dual_value;
  diag.empirical_regret = tr.empirical_regret;
  diag.regret_bound = tr.regret_bound;
  return {std::move(tr.policy), std::move(diag)};
}

// ---------------------------------------------------------------------------
// Certificate

Certificate approx_optimality_certificate(const TabularMDP& mdp, const Policy& pibar, const Tensor3& est,
                                          double eps_ail) {
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  if (pibar.horizon() != H || pibar.num_states() != S || pibar.num_actions() != A)
    throw std::invalid_argument("approx_optimality_certificate: policy shape does not match the MDP");
  if (!est.same_shape(Tensor3(H, S, A))) throw std::invalid_argument("approx_optimality_certificate: estimate shape");
  // The expert action is the rewarded one.
  int a1 = -1;
  for (int s = 0; s < S && a1 < 0; ++s)
    for (int a = 0; a < A; ++a)
      if (mdp.reward(0, s, a) > 0.0) {
        a1 = a;
        break;
      }
  if (a1 < 0) throw std::invalid_argument("approx_optimality_certificate: no rewarded action");
  const Policy expert = Policy::constant(H, S, A, a1);
  const ResetCliffReport rep = validate_reset_cliff(mdp, expert);
  if (!rep.passed)
    throw std::invalid_argument("approx_optimality_certificate: not a Reset Cliff MDP (" + rep.violations.front() + ")");
  const auto& good = rep.good_states;
  for (int h = 0; h < H; ++h) {
    bool any = false;
    for (int s : good) any = any || pibar.prob(h, s, a1) > 0.0;
    if (!any)
      throw std::invalid_argument("approx_optimality_certificate: policy never takes the expert action at step " +
                                  std::to_string(h) + " on good states");
  }

  const auto& M = mdp.model();
  // c(pi): start in s' at step l, take a1, then follow pibar.
  double c = 1.0;
  bool any_pair = false;
  std::vector<double> d(S), nd(S);
  for (int l = 0; l + 1 < H; ++l)
    for (int sp : good) {
      auto row = M.next(l, sp, a1);
      d.assign(row.begin(), row.end());
      for (int h = l + 1; h < H; ++h) {
        for (int s : good) {
          c = any_pair ? std::min(c, d[s]) : d[s];
          any_pair = true;
        }
        if (h + 1 == H) break;
        std::fill(nd.begin(), nd.end(), 0.0);
        for (int s = 0; s < S; ++s) {
          if (d[s] == 0.0) continue;
          for (int a = 0; a < A; ++a) {
            const double p = pibar.prob(h, s, a);
            if (p == 0.0) continue;
            auto r = M.next(h, s, a);
            for (int s2 = 0; s2 < S; ++s2) nd[s2] += d[s] * p * r[s2];
          }
        }
        d.swap(nd);
      }
    }

  const StateDist pm = state_marginal(occupancy_tensor(M, mdp.initial_dist(), pibar));
  const StateDist pe = state_marginal(occupancy_tensor(M, mdp.initial_dist(), expert));
  double lhs = 0.0;
  for (int l = 0; l < H; ++l) {
    double leak = 0.0;
    for (int s : good) leak += pm[l][s] * (1.0 - pibar.prob(l, s, a1));
    lhs += static_cast<double>(H - 1 - l) * leak;
  }
  Certificate cert;
  for (int s : good) {
    double phat = 0.0;
    for (int a = 0; a < A; ++a) phat += est(H - 1, s, a);
    const double cap = pe[H - 1][s] > 0.0 ? std::min(1.0, phat / pe[H - 1][s]) : 1.0;
    const double x = pibar.prob(H - 1, s, a1);
    if (x <= cap) {
      cert.last_step_set.push_back(s);
      lhs += pm[H - 1][s] * (cap - x);
    }
  }
  cert.c_pi = c;
  cert.lhs = lhs;
  cert.eps_ail = eps_ail;
  cert.satisfied = c * lhs <= eps_ail + 1e-12;
  return cert;
}

// ---------------------------------------------------------------------------
// BC as the VAIL optimum

BcReductionCheck verify_bc_is_ail_optimum(const TabularMDP& mdp, const TrajectoryDataset& single_traj,
                                          double resolution) {
  if (!mdp.model().is_deterministic())
    throw std::invalid_argument("verify_bc_is_ail_optimum: the reduction holds for deterministic transitions only");
  if (single_traj.size() != 1)
    throw std::invalid_argument("verify_bc_is_ail_optimum: expects exactly one expert trajectory");
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  const Policy pi_bc = bc(single_traj, S, A, H);
  const DistributionEstimate est = mle_estimate(single_traj, S, A);
  const CoverageSets cov = CoverageSets::from_dataset(single_traj, S);

  BruteforceOptions opt;
  opt.resolution = resolution;
  opt.fixed_mask.assign(H, std::vector<char>(S, 0));
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) opt.fixed_mask[h][s] = !cov.contains(h, s);
  opt.fixed_rows = pi_bc;
  const VailSolution grid = vail_bruteforce(mdp.model(), mdp.initial_dist(), est.dist(), opt);

  BcReductionCheck out;
  out.bc_objective = vail_objective(mdp, pi_bc, est);
  out.grid_minimum = grid.objective_value;
  out.passed = out.bc_objective <= out.grid_minimum + opt.tie_tol;
  return out;
}

}  // namespace imitlab
