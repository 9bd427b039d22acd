#ifndef MAXENT_RUN_IO_HPP
#define MAXENT_RUN_IO_HPP

#include <string>
#include <vector>

#include "maxent/ensemble.hpp"
#include "maxent/learner.hpp"

#include <nlohmann/json_fwd.hpp>

namespace maxent {

// Locale-independent formatting used for all CSV payloads ('.' decimal point,
// 12 significant digits, '\n' line endings).
std::string format_double(double v);

void write_curve_csv(const std::string& path, const std::vector<EvalPoint>& curve);
void write_ensemble_curve_csv(const std::string& path,
                              const std::vector<EnsembleEvalPoint>& curve,
                              int ensemble_size);

nlohmann::json config_to_json(const TrainerConfig& cfg);
// Unknown keys are rejected so stale config files fail loudly.
TrainerConfig config_from_json(const nlohmann::json& j, TrainerConfig base);

nlohmann::json agent_to_json(const AgentState& agent);
AgentState agent_from_json(const nlohmann::json& j, const TrainerConfig& cfg);

nlohmann::json ensemble_to_json(const EnsembleAgent& ensemble);
EnsembleAgent ensemble_from_json(const nlohmann::json& j, const TrainerConfig& cfg);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace maxent

#endif
