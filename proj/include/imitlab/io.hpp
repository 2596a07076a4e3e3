#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "imitlab/estimators.hpp"
#include "imitlab/mdp.hpp"
#include "imitlab/solvers.hpp"

namespace imitlab {

using nlohmann::json;

json tensor_to_json(const Tensor3& t);
Tensor3 tensor_from_json(const json& j);

/// {num_states, num_actions, horizon, initial_dist, transitions[h][s][a][s'], rewards[h][s][a]}
json mdp_to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const json& j);

json policy_to_json(const Policy& pi);
Policy policy_from_json(const json& j);

json estimate_to_json(const DistributionEstimate& est);
DistributionEstimate estimate_from_json(const json& j);

/// One {"steps": [[s, a], ...], "mask": [...]} object per line.
void write_dataset_jsonl(const TrajectoryDataset& data, std::ostream& out);
TrajectoryDataset read_dataset_jsonl(std::istream& in);
void save_dataset(const std::string& path, const TrajectoryDataset& data);
TrajectoryDataset load_dataset(const std::string& path);

json trace_to_json(std::span<const TraceEntry> trace);
std::vector<TraceEntry> trace_from_json(const json& j);

json load_json(const std::string& path);
void save_json(const std::string& path, const json& j);

}  // namespace imitlab
