#include "imitlab/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace imitlab {

json tensor_to_json(const Tensor3& t) {
  json out = json::array();
  for (std::size_t i = 0; i < t.dim0(); ++i) {
    json mid = json::array();
    for (std::size_t j = 0; j < t.dim1(); ++j) {
      auto r = t.row(i, j);
      mid.push_back(std::vector<double>(r.begin(), r.end()));
    }
    out.push_back(std::move(mid));
  }
  return out;
}

Tensor3 tensor_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw std::invalid_argument("tensor JSON must be a non-empty nested array");
  const std::size_t n0 = j.size(), n1 = j[0].size(), n2 = j[0][0].size();
  Tensor3 t(n0, n1, n2);
  for (std::size_t i = 0; i < n0; ++i) {
    if (j[i].size() != n1) throw std::invalid_argument("tensor JSON is ragged");
    for (std::size_t k = 0; k < n1; ++k) {
      if (j[i][k].size() != n2) throw std::invalid_argument("tensor JSON is ragged");
      for (std::size_t l = 0; l < n2; ++l) t(i, k, l) = j[i][k][l].get<double>();
    }
  }
  return t;
}

json mdp_to_json(const TabularMDP& mdp) {
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  json trans = json::array();
  for (int h = 0; h + 1 < H; ++h) {
    json per_s = json::array();
    for (int s = 0; s < S; ++s) {
      json per_a = json::array();
      for (int a = 0; a < A; ++a) {
        auto r = mdp.model().next(h, s, a);
        per_a.push_back(std::vector<double>(r.begin(), r.end()));
      }
      per_s.push_back(std::move(per_a));
    }
    trans.push_back(std::move(per_s));
  }
  return {{"num_states", S},
          {"num_actions", A},
          {"horizon", H},
          {"initial_dist", mdp.initial_dist()},
          {"transitions", std::move(trans)},
          {"rewards", tensor_to_json(mdp.rewards())}};
}

TabularMDP mdp_from_json(const json& j) {
  const int S = j.at("num_states").get<int>();
  const int A = j.at("num_actions").get<int>();
  const int H = j.at("horizon").get<int>();
  if (S < 1 || A < 1 || H < 1) throw std::invalid_argument("MDP JSON: sizes must be positive");
  const auto& tj = j.at("transitions");
  if (!tj.is_array() || static_cast<int>(tj.size()) != H - 1)
    throw std::invalid_argument("MDP JSON: transitions must have horizon-1 entries");
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(H - 1) * S * A * S);
  for (const auto& per_s : tj) {
    if (static_cast<int>(per_s.size()) != S) throw std::invalid_argument("MDP JSON: transitions shape");
    for (const auto& per_a : per_s) {
      if (static_cast<int>(per_a.size()) != A) throw std::invalid_argument("MDP JSON: transitions shape");
      for (const auto& row : per_a) {
        if (static_cast<int>(row.size()) != S) throw std::invalid_argument("MDP JSON: transitions shape");
        for (const auto& x : row) flat.push_back(x.get<double>());
      }
    }
  }
  return TabularMDP(TransitionModel(S, A, H, std::move(flat)), j.at("initial_dist").get<std::vector<double>>(),
                    tensor_from_json(j.at("rewards")));
}

json policy_to_json(const Policy& pi) { return tensor_to_json(pi.probs()); }
Policy policy_from_json(const json& j) { return Policy(tensor_from_json(j)); }

json estimate_to_json(const DistributionEstimate& est) {
  json out = {{"kind", kind_name(est.kind())}, {"dist", tensor_to_json(est.dist())}};
  if (const auto& sr = est.split_record()) {
    json cov = json::array();
    for (int h = 0; h < sr->coverage.horizon(); ++h) {
      json states = json::array();
      for (int s : sr->coverage.states(h)) states.push_back({s, sr->coverage.expert_action(h, s)});
      cov.push_back(std::move(states));
    }
    out["split_record"] = {{"d1", sr->d1_indices},
                           {"d1c", sr->d1c_indices},
                           {"num_states", sr->coverage.num_states()},
                           {"coverage", std::move(cov)}};
  }
  return out;
}

DistributionEstimate estimate_from_json(const json& j) {
  const auto kind = kind_from_name(j.at("kind").get<std::string>());
  Tensor3 dist = tensor_from_json(j.at("dist"));
  std::optional<SplitRecord> split;
  if (j.contains("split_record")) {
    const auto& sj = j.at("split_record");
    SplitRecord sr;
    sr.d1_indices = sj.at("d1").get<std::vector<std::size_t>>();
    sr.d1c_indices = sj.at("d1c").get<std::vector<std::size_t>>();
    const auto& cj = sj.at("coverage");
    sr.coverage = CoverageSets(static_cast<int>(cj.size()), sj.at("num_states").get<int>());
    for (std::size_t h = 0; h < cj.size(); ++h)
      for (const auto& pair : cj[h]) sr.coverage.record(static_cast<int>(h), pair.at(0).get<int>(), pair.at(1).get<int>());
    split = std::move(sr);
  }
  return DistributionEstimate(std::move(dist), kind, std::move(split));
}

void write_dataset_jsonl(const TrajectoryDataset& data, std::ostream& out) {
  for (const auto& t : data.trajectories) {
    json steps = json::array();
    for (const auto& sa : t.steps) steps.push_back({sa.state, sa.action});
    json mask = json::array();
    for (std::size_t h = 0; h < t.length(); ++h) mask.push_back(t.observed(h));
    out << json{{"steps", std::move(steps)}, {"mask", std::move(mask)}}.dump() << '\n';
  }
}

TrajectoryDataset read_dataset_jsonl(std::istream& in) {
  TrajectoryDataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Trajectory t;
      for (const auto& sa : j.at("steps")) t.steps.push_back({sa.at(0).get<int>(), sa.at(1).get<int>()});
      if (j.contains("mask"))
        for (const auto& b : j.at("mask")) t.mask.push_back(b.get<bool>());
      else
        t.mask.assign(t.steps.size(), true);
      d.trajectories.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  d.validate();
  return d;
}

void save_dataset(const std::string& path, const TrajectoryDataset& data) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset_jsonl(data, f);
}

TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  TrajectoryDataset d = read_dataset_jsonl(f);
  d.seed_provenance = "loaded from " + path;
  return d;
}

json trace_to_json(std::span<const TraceEntry> trace) {
  json out = json::array();
  for (const auto& e : trace)
    out.push_back({{"w", tensor_to_json(e.w)},
                   {"occupancy", tensor_to_json(e.occupancy)},
                   {"best_response_value", e.best_response_value},
                   {"dual_value", e.dual_value}});
  return out;
}

std::vector<TraceEntry> trace_from_json(const json& j) {
  std::vector<TraceEntry> out;
  for (const auto& e : j)
    out.push_back({tensor_from_json(e.at("w")), tensor_from_json(e.at("occupancy")),
                   e.at("best_response_value").get<double>(), e.at("dual_value").get<double>()});
  return out;
}

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
}

}  // namespace imitlab
