#include "imitlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace imitlab {

CoverageSets::CoverageSets(int horizon, int num_states)
    : action_(horizon, std::vector<int>(num_states, kUncovered)) {}

CoverageSets CoverageSets::from_dataset(const TrajectoryDataset& data, int num_states) {
  data.validate(num_states, -1);
  CoverageSets cov(data.horizon(), num_states);
  for (const auto& t : data.trajectories)
    for (std::size_t h = 0; h < t.length(); ++h)
      if (t.observed(h)) cov.record(static_cast<int>(h), t.steps[h].state, t.steps[h].action);
  return cov;
}

void CoverageSets::record(int h, int s, int a) {
  int& slot = action_.at(h).at(s);
  if (slot == kUncovered)
    slot = a;
  else if (slot != a)
    slot = kConflict;
}

bool CoverageSets::has_conflict() const {
  for (const auto& row : action_)
    for (int a : row)
      if (a == kConflict) return true;
  return false;
}

int CoverageSets::expert_action(int h, int s) const {
  const int a = action_[h][s];
  if (a == kUncovered) throw std::logic_error("CoverageSets: state is not covered");
  if (a == kConflict)
    throw std::invalid_argument("conflicting expert actions recorded at (h=" + std::to_string(h) +
                                ", s=" + std::to_string(s) + "); the expert is not deterministic");
  return a;
}

std::vector<int> CoverageSets::states(int h) const {
  std::vector<int> out;
  for (int s = 0; s < num_states(); ++s)
    if (contains(h, s)) out.push_back(s);
  return out;
}

DistributionEstimate::DistributionEstimate(Tensor3 dist, Kind kind, std::optional<SplitRecord> split)
    : dist_(std::move(dist)), kind_(kind), split_(std::move(split)) {
  for (double x : dist_.data())
    if (!(x >= 0.0)) throw std::invalid_argument("DistributionEstimate: negative or NaN entry");
  for (std::size_t h = 0; h < dist_.dim0(); ++h) {
    double mass = 0.0;
    for (double x : dist_.slice(h)) mass += x;
    if (kind_ == Kind::MLE || kind_ == Kind::MaskedMLE) {
      if (std::abs(mass - 1.0) > kDerivedTol)
        throw std::invalid_argument("DistributionEstimate: slice h=" + std::to_string(h) + " is not normalized");
    } else if (mass > 2.0 + kDerivedTol) {
      throw std::invalid_argument("DistributionEstimate: slice h=" + std::to_string(h) + " has mass above 2");
    }
  }
}

const char* kind_name(DistributionEstimate::Kind kind) {
  switch (kind) {
    case DistributionEstimate::Kind::MLE: return "MLE";
    case DistributionEstimate::Kind::MaskedMLE: return "MaskedMLE";
    case DistributionEstimate::Kind::MimicMD: return "MimicMD";
    case DistributionEstimate::Kind::MimicMDModelBased: return "MimicMDModelBased";
  }
  return "?";
}

DistributionEstimate::Kind kind_from_name(const std::string& name) {
  for (auto k : {DistributionEstimate::Kind::MLE, DistributionEstimate::Kind::MaskedMLE,
                 DistributionEstimate::Kind::MimicMD, DistributionEstimate::Kind::MimicMDModelBased})
    if (name == kind_name(k)) return k;
  throw std::invalid_argument("unknown estimate kind: " + name);
}

namespace {

Tensor3 count_pairs(const TrajectoryDataset& data, int S, int A) {
  data.validate(S, A);
  const int H = data.horizon();
  Tensor3 counts(H, S, A);
  const double w = 1.0 / static_cast<double>(data.size());
  for (const auto& t : data.trajectories)
    for (int h = 0; h < H; ++h)
      if (t.observed(h)) counts(h, t.steps[h].state, t.steps[h].action) += w;
  return counts;
}

}  // namespace

DistributionEstimate mle_estimate(const TrajectoryDataset& data, int num_states, int num_actions) {
  if (data.empty()) throw std::invalid_argument("mle_estimate: empty dataset");
  if (!data.fully_observed()) throw std::invalid_argument("mle_estimate: dataset contains masked steps");
  return DistributionEstimate(count_pairs(data, num_states, num_actions), DistributionEstimate::Kind::MLE);
}

DistributionEstimate masked_mle_estimate(const TrajectoryDataset& data, int num_states, int num_actions) {
  if (data.empty()) throw std::invalid_argument("masked_mle_estimate: empty dataset");
  Tensor3 d = count_pairs(data, num_states, num_actions);
  const auto& first = data.trajectories.front();
  const double fill = 1.0 / (static_cast<double>(num_states) * num_actions);
  for (int h = 0; h < data.horizon(); ++h)
    if (!first.observed(h))
      for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) d(h, s, a) = fill;
  return DistributionEstimate(std::move(d), DistributionEstimate::Kind::MaskedMLE);
}

DatasetSplit split_dataset(const TrajectoryDataset& data, int num_states, std::uint64_t seed) {
  if (data.size() < 2) throw std::invalid_argument("split_dataset: need at least 2 trajectories");
  data.validate(num_states, -1);
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  const std::size_t half = data.size() / 2;
  DatasetSplit out;
  out.d1_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
  out.d1c_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
  std::sort(out.d1_indices.begin(), out.d1_indices.end());
  std::sort(out.d1c_indices.begin(), out.d1c_indices.end());
  for (auto i : out.d1_indices) out.d1.trajectories.push_back(data.trajectories[i]);
  for (auto i : out.d1c_indices) out.d1c.trajectories.push_back(data.trajectories[i]);
  out.d1.seed_provenance = data.seed_provenance + " | D1 split seed=" + std::to_string(seed);
  out.d1c.seed_provenance = data.seed_provenance + " | D1c split seed=" + std::to_string(seed);
  out.coverage = CoverageSets::from_dataset(out.d1, num_states);
  return out;
}

bool prefix_covered(const Trajectory& traj, const CoverageSets& cov, int h) {
  if (h < 0 || h >= static_cast<int>(traj.length()) || h >= cov.horizon())
    throw std::invalid_argument("prefix_covered: step out of range");
  for (int l = 0; l <= h; ++l)
    if (!cov.contains(l, traj.steps[l].state)) return false;
  return true;
}

Tensor3 mimic_md_first_term(const TransitionModel& model, std::span<const double> rho, const CoverageSets& cov,
                            int num_actions) {
  const int H = model.horizon(), S = model.num_states();
  if (cov.horizon() != H || cov.num_states() != S) throw std::invalid_argument("mimic_md_first_term: shape mismatch");
  if (num_actions != model.num_actions()) throw std::invalid_argument("mimic_md_first_term: action count mismatch");
  Tensor3 out(H, S, num_actions);
  std::vector<double> q(S), next(S);
  for (int s = 0; s < S; ++s) q[s] = cov.contains(0, s) ? rho[s] : 0.0;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s)
      if (cov.contains(h, s)) out(h, s, cov.expert_action(h, s)) = q[s];
    if (h + 1 == H) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (!cov.contains(h, s) || q[s] == 0.0) continue;
      auto row = model.next(h, s, cov.expert_action(h, s));
      for (int s2 = 0; s2 < S; ++s2) next[s2] += q[s] * row[s2];
    }
    for (int s = 0; s < S; ++s) q[s] = cov.contains(h + 1, s) ? next[s] : 0.0;
  }
  return out;
}

Tensor3 mimic_md_second_term(const TrajectoryDataset& d1c, const CoverageSets& cov, int num_states, int num_actions) {
  if (d1c.empty()) throw std::invalid_argument("mimic_md_second_term: D1c is empty");
  d1c.validate(num_states, num_actions);
  const int H = d1c.horizon();
  Tensor3 out(H, num_states, num_actions);
  const double w = 1.0 / static_cast<double>(d1c.size());
  for (const auto& t : d1c.trajectories) {
    // Once the prefix leaves coverage it stays uncovered.
    int first_uncovered = H;
    for (int h = 0; h < H; ++h)
      if (!cov.contains(h, t.steps[h].state)) {
        first_uncovered = h;
        break;
      }
    for (int h = first_uncovered; h < H; ++h) out(h, t.steps[h].state, t.steps[h].action) += w;
  }
  return out;
}

namespace {

void check_mimic_input(const TrajectoryDataset& data, const char* who) {
  if (data.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 trajectories");
  if (!data.fully_observed()) throw std::invalid_argument(std::string(who) + ": masked steps are not supported");
}

Tensor3 add(const Tensor3& a, const Tensor3& b) {
  Tensor3 out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

}  // namespace

DistributionEstimate mimic_md_estimate(const TrajectoryDataset& data, const TabularMDP& mdp, std::uint64_t seed) {
  check_mimic_input(data, "mimic_md_estimate");
  data.validate(mdp.num_states(), mdp.num_actions());
  if (data.horizon() != mdp.horizon()) throw std::invalid_argument("mimic_md_estimate: horizon mismatch");
  DatasetSplit split = split_dataset(data, mdp.num_states(), seed);
  if (split.coverage.has_conflict())
    throw std::invalid_argument("mimic_md_estimate: D1 records two actions at one (h, s)");
  Tensor3 first = mimic_md_first_term(mdp.model(), mdp.initial_dist(), split.coverage, mdp.num_actions());
  Tensor3 second = mimic_md_second_term(split.d1c, split.coverage, mdp.num_states(), mdp.num_actions());
  return DistributionEstimate(add(first, second), DistributionEstimate::Kind::MimicMD,
                              SplitRecord{split.d1_indices, split.d1c_indices, split.coverage});
}

Policy bc_from_coverage(const CoverageSets& cov, int num_actions) {
  const int H = cov.horizon(), S = cov.num_states();
  Tensor3 t(H, S, num_actions, 1.0 / num_actions);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      if (cov.contains(h, s)) {
        const int a = cov.expert_action(h, s);
        for (int b = 0; b < num_actions; ++b) t(h, s, b) = b == a ? 1.0 : 0.0;
      }
  return Policy(std::move(t));
}

DistributionEstimate mimic_md_estimate_model_based(const TrajectoryDataset& data, ProblemDims dims,
                                                   const RolloutSampler& rollout_sampler, std::size_t n_prime,
                                                   std::uint64_t seed) {
  check_mimic_input(data, "mimic_md_estimate_model_based");
  if (n_prime < 1) throw std::invalid_argument("mimic_md_estimate_model_based: n' must be at least 1");
  if (!rollout_sampler) throw std::invalid_argument("mimic_md_estimate_model_based: no rollout sampler");
  data.validate(dims.num_states, dims.num_actions);
  if (data.horizon() != dims.horizon) throw std::invalid_argument("mimic_md_estimate_model_based: horizon mismatch");
  const int H = dims.horizon, S = dims.num_states, A = dims.num_actions;
  DatasetSplit split = split_dataset(data, S, seed);
  if (split.coverage.has_conflict())
    throw std::invalid_argument("mimic_md_estimate_model_based: D1 records two actions at one (h, s)");
  const Policy bc = bc_from_coverage(split.coverage, A);
  const TrajectoryDataset rollouts = rollout_sampler(bc, n_prime, derive_seed(seed, {1}));
  if (rollouts.size() != n_prime) throw std::runtime_error("rollout sampler returned the wrong number of trajectories");
  rollouts.validate(S, A);
  if (rollouts.horizon() != H) throw std::runtime_error("rollout sampler returned the wrong horizon");

  Tensor3 first(H, S, A);
  const double w = 1.0 / static_cast<double>(n_prime);
  for (const auto& t : rollouts.trajectories)
    for (int h = 0; h < H; ++h) {
      if (!split.coverage.contains(h, t.steps[h].state)) break;
      first(h, t.steps[h].state, t.steps[h].action) += w;
    }
  Tensor3 second = mimic_md_second_term(split.d1c, split.coverage, S, A);
  return DistributionEstimate(add(first, second), DistributionEstimate::Kind::MimicMDModelBased,
                              SplitRecord{split.d1_indices, split.d1c_indices, split.coverage});
}

double missing_mass(std::span<const int> step1_states, std::span<const double> rho) {
  std::vector<char> seen(rho.size(), 0);
  for (int s : step1_states) {
    if (s < 0 || static_cast<std::size_t>(s) >= rho.size()) throw std::invalid_argument("missing_mass: state out of range");
    seen[s] = 1;
  }
  double mass = 0.0;
  for (std::size_t s = 0; s < rho.size(); ++s)
    if (!seen[s]) mass += rho[s];
  return mass;
}

}  // namespace imitlab
