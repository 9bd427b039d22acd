#include "maxent/run_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace maxent {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_curve_csv(const std::string& path, const std::vector<EvalPoint>& curve) {
    std::ofstream out(path);
    check(out.good(), "cannot open for writing: " + path);
    out << "step,eval_return_mean,eval_return_std,v_loss,q_loss,entropy_estimate\n";
    for (const EvalPoint& p : curve) {
        out << p.step << ',' << format_double(p.return_mean) << ','
            << format_double(p.return_std) << ',' << format_double(p.v_loss) << ','
            << format_double(p.q_loss) << ',' << format_double(p.entropy_estimate)
            << '\n';
    }
}

void write_ensemble_curve_csv(const std::string& path,
                              const std::vector<EnsembleEvalPoint>& curve,
                              int ensemble_size) {
    std::ofstream out(path);
    check(out.good(), "cannot open for writing: " + path);
    out << "step,eval_return_mean,eval_return_std,v_loss,q_loss,entropy_estimate";
    for (int i = 0; i < ensemble_size; ++i) out << ",member_" << i << "_q_loss";
    out << ",q_psi_loss\n";
    for (const EnsembleEvalPoint& p : curve) {
        out << p.step << ',' << format_double(p.return_mean) << ','
            << format_double(p.return_std) << ',' << format_double(p.v_loss) << ','
            << format_double(p.q_loss) << ',' << format_double(p.entropy_estimate);
        for (double mq : p.member_q_loss) out << ',' << format_double(mq);
        out << ',' << format_double(p.q_psi_loss) << '\n';
    }
}

nlohmann::json config_to_json(const TrainerConfig& cfg) {
    return nlohmann::json{{"entropy", {{"kind", cfg.entropy.name()}, {"index", cfg.entropy.index}}},
                          {"alpha", cfg.alpha},
                          {"reward_scale", cfg.reward_scale},
                          {"gamma", cfg.gamma},
                          {"tau", cfg.tau},
                          {"k_samples", cfg.k_samples},
                          {"batch_size", cfg.batch_size},
                          {"gradient_steps", cfg.gradient_steps},
                          {"lr_v", cfg.lr_v},
                          {"lr_q", cfg.lr_q},
                          {"lr_policy", cfg.lr_policy},
                          {"hidden", cfg.hidden},
                          {"buffer_capacity", cfg.buffer_capacity},
                          {"warmup_steps", cfg.warmup_steps},
                          {"total_steps", cfg.total_steps},
                          {"eval_interval", cfg.eval_interval},
                          {"eval_episodes", cfg.eval_episodes},
                          {"seed", cfg.seed},
                          {"ensemble_size", cfg.ensemble_size},
                          {"ensemble_indices", cfg.ensemble_indices}};
}

TrainerConfig config_from_json(const nlohmann::json& j, TrainerConfig cfg) {
    static const std::set<std::string> known{
        "entropy",        "alpha",         "reward_scale",   "gamma",
        "tau",            "k_samples",     "batch_size",     "gradient_steps",
        "lr_v",           "lr_q",          "lr_policy",      "hidden",
        "buffer_capacity", "warmup_steps", "total_steps",    "eval_interval",
        "eval_episodes",  "seed",          "ensemble_size",  "ensemble_indices"};
    for (const auto& [key, _] : j.items())
        check(known.count(key) > 0, "config: unknown key '" + key + "'");

    if (j.contains("entropy")) {
        const auto& e = j.at("entropy");
        cfg.entropy = entropy_measure_from_name(e.at("kind").get<std::string>(),
                                                e.value("index", 1.0));
    }
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("reward_scale")) cfg.reward_scale = j.at("reward_scale").get<double>();
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
    if (j.contains("k_samples")) cfg.k_samples = j.at("k_samples").get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("gradient_steps")) cfg.gradient_steps = j.at("gradient_steps").get<int>();
    if (j.contains("lr_v")) cfg.lr_v = j.at("lr_v").get<double>();
    if (j.contains("lr_q")) cfg.lr_q = j.at("lr_q").get<double>();
    if (j.contains("lr_policy")) cfg.lr_policy = j.at("lr_policy").get<double>();
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
    if (j.contains("buffer_capacity"))
        cfg.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
    if (j.contains("warmup_steps")) cfg.warmup_steps = j.at("warmup_steps").get<int>();
    if (j.contains("total_steps")) cfg.total_steps = j.at("total_steps").get<long>();
    if (j.contains("eval_interval")) cfg.eval_interval = j.at("eval_interval").get<int>();
    if (j.contains("eval_episodes")) cfg.eval_episodes = j.at("eval_episodes").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("ensemble_size")) cfg.ensemble_size = j.at("ensemble_size").get<int>();
    if (j.contains("ensemble_indices"))
        cfg.ensemble_indices = j.at("ensemble_indices").get<std::vector<double>>();
    return cfg;
}

nlohmann::json agent_to_json(const AgentState& agent) {
    return nlohmann::json{{"policy", policy_to_json(agent.policy)},
                          {"v_net", mlp_to_json(agent.v_net)},
                          {"v_target", mlp_to_json(agent.v_target)},
                          {"q_net", mlp_to_json(agent.q_net)},
                          {"entropy",
                           {{"kind", agent.entropy.name()}, {"index", agent.entropy.index}}}};
}

AgentState agent_from_json(const nlohmann::json& j, const TrainerConfig& cfg) {
    AgentState ag;
    ag.policy = policy_from_json(j.at("policy"));
    ag.v_net = mlp_from_json(j.at("v_net"));
    ag.v_target = mlp_from_json(j.at("v_target"));
    ag.q_net = mlp_from_json(j.at("q_net"));
    ag.entropy = entropy_measure_from_name(j.at("entropy").at("kind").get<std::string>(),
                                           j.at("entropy").value("index", 1.0));
    ag.policy_opt =
        AdamState::for_param_count(ag.policy.net.param_count(), cfg.lr_policy, "policy");
    ag.v_opt = AdamState::for_param_count(ag.v_net.param_count(), cfg.lr_v, "v_net");
    ag.q_opt = AdamState::for_param_count(ag.q_net.param_count(), cfg.lr_q, "q_net");
    return ag;
}

nlohmann::json ensemble_to_json(const EnsembleAgent& ensemble) {
    nlohmann::json members = nlohmann::json::array();
    for (const AgentState& m : ensemble.members) members.push_back(agent_to_json(m));
    return nlohmann::json{{"members", members},
                          {"q_psi", mlp_to_json(ensemble.q_psi)},
                          {"q_psi_target", mlp_to_json(ensemble.q_psi_target)}};
}

EnsembleAgent ensemble_from_json(const nlohmann::json& j, const TrainerConfig& cfg) {
    EnsembleAgent ens;
    for (const auto& mj : j.at("members")) ens.members.push_back(agent_from_json(mj, cfg));
    check(!ens.members.empty(), "ensemble snapshot has no members");
    ens.q_psi = mlp_from_json(j.at("q_psi"));
    ens.q_psi_target = mlp_from_json(j.at("q_psi_target"));
    ens.q_psi_opt = AdamState::for_param_count(ens.q_psi.param_count(), cfg.lr_q, "q_psi");
    return ens;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    check(out.good(), "cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "cannot open for reading: " + path);
    return nlohmann::json::parse(in);
}

}  // namespace maxent
