#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "maxent/analysis.hpp"
#include "maxent/ensemble.hpp"
#include "maxent/envs.hpp"
#include "maxent/learner.hpp"
#include "maxent/run_io.hpp"
#include "maxent/tabular.hpp"
#include "maxent/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_double_list(text)) out.push_back(static_cast<int>(v));
    return out;
}

// "start:stop:step", inclusive of both ends (within half a step).
std::vector<double> parse_grid(const std::string& text) {
    std::stringstream ss(text);
    std::string part;
    std::vector<double> parts;
    while (std::getline(ss, part, ':')) parts.push_back(std::stod(part));
    if (parts.size() == 1) return {parts[0]};
    maxent::check(parts.size() == 3 && parts[2] > 0.0,
                  "grid must be 'start:stop:step' or a single value");
    const int count = static_cast<int>(std::lround((parts[1] - parts[0]) / parts[2])) + 1;
    maxent::check(count >= 1, "grid is empty");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(parts[0] + i * parts[2]);
    return out;
}

std::string resolve_outdir(const std::string& outdir) {
    fs::path p(outdir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("MAXENT_OUTPUT_ROOT")) p = fs::path(root) / p;
    }
    return p.string();
}

struct TrainCli {
    std::string algo;
    std::string env_name;
    std::string outdir;
    std::string config_path;
    double index = 2.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    long steps = -1;
    int eval_interval = -1;
    int eval_episodes = -1;
    double gamma = -1, tau = -1, reward_scale = -1, lr = -1;
    int batch_size = -1, k_samples = -1, gradient_steps = -1, warmup = -1;
    long buffer_capacity = -1;
    int ensemble_size = -1;
    std::string hidden;            // "fast", "default", or comma list
    std::string ensemble_indices;  // comma list
    bool allow_shannon_limit = false;
};

double default_alpha(const std::string& algo) {
    if (algo == "sac") return 1.0;
    if (algo == "tac" || algo == "rac") return 0.8;
    return 0.6;  // eac-tac, eac-rac
}

bool is_ensemble_algo(const std::string& algo) {
    return algo == "eac-tac" || algo == "eac-rac";
}

maxent::EntropyMeasure measure_for(const std::string& algo, double index,
                                   bool allow_shannon_limit) {
    if (algo == "sac") return maxent::EntropyMeasure::shannon();
    if (algo == "tac" || algo == "eac-tac") {
        if (index <= 1.0) {
            maxent::check(allow_shannon_limit && index == 1.0 && algo == "tac",
                          "algo " + algo +
                              " requires an entropic index q > 1 "
                              "(pass --allow-shannon-limit to run the q = 1 limit)");
            return maxent::EntropyMeasure::shannon();
        }
        return maxent::EntropyMeasure::tsallis(index);
    }
    maxent::check(index > 1.0, "algo " + algo + " requires an entropic index eta > 1");
    return maxent::EntropyMeasure::renyi(index);
}

std::vector<int> parse_hidden(const std::string& text) {
    if (text == "fast") return {64, 64};
    if (text == "default") return {128, 128};
    auto sizes = parse_int_list(text);
    maxent::check(!sizes.empty(), "empty hidden layer list");
    return sizes;
}

// Precedence: built-in per-algorithm defaults < config file < flags.
maxent::TrainerConfig resolve_config(const CLI::App* cmd, TrainCli& opt) {
    json cfg_json = json::object();
    if (!opt.config_path.empty()) {
        json file = maxent::read_json_file(opt.config_path);
        if (file.contains("config")) {  // metadata file from a previous run
            cfg_json = file.at("config");
            if (opt.algo.empty() && file.contains("algo"))
                opt.algo = file.at("algo").get<std::string>();
            if (opt.env_name.empty() && file.contains("env"))
                opt.env_name = file.at("env").get<std::string>();
        } else {
            cfg_json = file;
        }
    }
    maxent::check(!opt.algo.empty(), "--algo is required (flag or metadata config)");
    maxent::check(!opt.env_name.empty(), "--env is required (flag or metadata config)");

    maxent::TrainerConfig cfg;
    cfg.alpha = default_alpha(opt.algo);
    cfg.entropy = measure_for(opt.algo, 2.0, false);
    cfg = maxent::config_from_json(cfg_json, cfg);

    const bool index_flag = cmd->count("--index") > 0;
    if (index_flag || !cfg_json.contains("entropy"))
        cfg.entropy = measure_for(opt.algo, index_flag ? opt.index : 2.0,
                                  opt.allow_shannon_limit);
    if (cmd->count("--alpha")) cfg.alpha = opt.alpha;
    if (cmd->count("--seed")) cfg.seed = opt.seed;
    if (opt.steps >= 0) cfg.total_steps = opt.steps;
    if (opt.eval_interval > 0) cfg.eval_interval = opt.eval_interval;
    if (opt.eval_episodes > 0) cfg.eval_episodes = opt.eval_episodes;
    if (opt.gamma >= 0) cfg.gamma = opt.gamma;
    if (opt.tau >= 0) cfg.tau = opt.tau;
    if (opt.reward_scale >= 0) cfg.reward_scale = opt.reward_scale;
    if (opt.lr > 0) cfg.lr_v = cfg.lr_q = cfg.lr_policy = opt.lr;
    if (opt.batch_size > 0) cfg.batch_size = opt.batch_size;
    if (opt.k_samples > 0) cfg.k_samples = opt.k_samples;
    if (opt.gradient_steps > 0) cfg.gradient_steps = opt.gradient_steps;
    if (opt.warmup >= 0) cfg.warmup_steps = opt.warmup;
    if (opt.buffer_capacity > 0) cfg.buffer_capacity = opt.buffer_capacity;
    if (opt.ensemble_size > 0) cfg.ensemble_size = opt.ensemble_size;
    if (!opt.hidden.empty()) cfg.hidden = parse_hidden(opt.hidden);
    if (!opt.ensemble_indices.empty())
        cfg.ensemble_indices = parse_double_list(opt.ensemble_indices);

    if (is_ensemble_algo(opt.algo)) {
        for (double ix : cfg.ensemble_indices)
            maxent::check(ix > 1.0, "ensemble member indices must be > 1");
        if (cmd->count("--index")) cfg.ensemble_indices = {opt.index};
    }
    cfg.validate();
    return cfg;
}

void add_train_options(CLI::App* cmd, TrainCli& opt) {
    cmd->add_option("--algo", opt.algo, "sac | tac | rac | eac-tac | eac-rac");
    cmd->add_option("--env", opt.env_name, "environment name (see list-envs)");
    cmd->add_option("--index,--q,--eta", opt.index, "entropic index");
    cmd->add_option("--alpha", opt.alpha, "entropy weight");
    cmd->add_option("--seed", opt.seed, "master seed");
    cmd->add_option("--steps", opt.steps, "total environment steps");
    cmd->add_option("--eval-interval", opt.eval_interval);
    cmd->add_option("--eval-episodes", opt.eval_episodes);
    cmd->add_option("--gamma", opt.gamma);
    cmd->add_option("--tau", opt.tau);
    cmd->add_option("--reward-scale", opt.reward_scale);
    cmd->add_option("--lr", opt.lr, "learning rate for all networks");
    cmd->add_option("--batch-size", opt.batch_size);
    cmd->add_option("--k-samples", opt.k_samples);
    cmd->add_option("--gradient-steps", opt.gradient_steps);
    cmd->add_option("--warmup", opt.warmup);
    cmd->add_option("--buffer-capacity", opt.buffer_capacity);
    cmd->add_option("--ensemble-size", opt.ensemble_size);
    cmd->add_option("--hidden", opt.hidden, "'default' (128,128), 'fast' (64,64), or comma list");
    cmd->add_option("--ensemble-indices", opt.ensemble_indices, "comma list of member indices");
    cmd->add_option("--config", opt.config_path, "JSON config or meta.json from a previous run");
    cmd->add_flag("--allow-shannon-limit", opt.allow_shannon_limit,
                  "permit tac with q = 1 (Shannon limit)");
    cmd->add_option("--outdir", opt.outdir, "output directory");
}

json meta_for_run(const std::string& algo, const std::string& env_name,
                  const maxent::TrainerConfig& cfg, int argc, char** argv) {
    std::string cmdline;
    for (int i = 0; i < argc; ++i) {
        if (i) cmdline += ' ';
        cmdline += argv[i];
    }
    return json{{"algo", algo},
                {"env", env_name},
                {"config", maxent::config_to_json(cfg)},
                {"seed", cfg.seed},
                {"git_revision", maxent::kGitRevision},
                {"command_line", cmdline}};
}

// Runs one training cell and writes curve.csv / meta.json / snapshot.json.
// Returns the final evaluation return mean (0 when the curve is empty).
double run_training(const std::string& algo, const std::string& env_name,
                    maxent::TrainerConfig cfg, const std::string& outdir,
                    const json& meta) {
    fs::create_directories(outdir);
    cfg.diagnostics_dir = outdir;
    auto env = maxent::make_env(env_name);
    double final_return = 0.0;
    if (is_ensemble_algo(algo)) {
        maxent::EnsembleTrainResult res = maxent::train_ensemble(*env, cfg);
        maxent::write_ensemble_curve_csv(outdir + "/curve.csv", res.curve,
                                         res.agent.size());
        maxent::write_json_file(outdir + "/snapshot.json",
                                maxent::ensemble_to_json(res.agent));
        if (!res.curve.empty()) final_return = res.curve.back().return_mean;
    } else {
        maxent::TrainResult res = maxent::train(*env, cfg);
        maxent::write_curve_csv(outdir + "/curve.csv", res.curve);
        maxent::write_json_file(outdir + "/snapshot.json",
                                maxent::agent_to_json(res.agent));
        if (!res.curve.empty()) final_return = res.curve.back().return_mean;
    }
    maxent::write_json_file(outdir + "/meta.json", meta);
    return final_return;
}

int cmd_train(CLI::App* cmd, TrainCli& opt, int argc, char** argv) {
    maxent::TrainerConfig cfg = resolve_config(cmd, opt);
    std::string outdir = opt.outdir;
    if (outdir.empty())
        outdir = "runs/" + opt.algo + "_" + opt.env_name + "_seed" +
                 std::to_string(cfg.seed);
    outdir = resolve_outdir(outdir);
    const double final_return = run_training(
        opt.algo, opt.env_name, cfg, outdir, meta_for_run(opt.algo, opt.env_name, cfg, argc, argv));
    std::cout << "run complete: " << outdir
              << " final_return=" << maxent::format_double(final_return) << "\n";
    return 0;
}

int cmd_sweep(CLI::App* cmd, TrainCli& opt, const std::string& grid_text,
              const std::string& seeds_text, int argc, char** argv) {
    maxent::check(opt.algo == "tac" || opt.algo == "rac",
                  "sweep supports --algo tac or rac");
    const std::vector<double> grid = parse_double_list(grid_text);
    maxent::check(!grid.empty(), "sweep: empty index grid");
    std::vector<double> seeds = parse_double_list(seeds_text);
    if (seeds.empty()) seeds = {0};

    std::string outdir = opt.outdir.empty() ? ("sweep_" + opt.algo + "_" + opt.env_name)
                                            : opt.outdir;
    outdir = resolve_outdir(outdir);
    fs::create_directories(outdir);

    struct Cell {
        double index;
        std::uint64_t seed;
        std::string dir;
        std::future<double> result;
    };
    std::vector<Cell> cells;
    for (double ix : grid)
        for (double sd : seeds) {
            TrainCli cell_opt = opt;
            cell_opt.index = ix;
            // Reuse the train resolution path so config files and flags apply.
            maxent::TrainerConfig cfg = resolve_config(cmd, cell_opt);
            cfg.entropy = measure_for(opt.algo, ix, false);
            cfg.seed = static_cast<std::uint64_t>(sd);
            std::ostringstream dir;
            dir << outdir << "/index" << maxent::format_double(ix) << "_seed" << cfg.seed;
            json meta = meta_for_run(opt.algo, opt.env_name, cfg, argc, argv);
            cells.push_back({ix, cfg.seed, dir.str(), {}});
            Cell& cell = cells.back();
            cell.result = std::async(std::launch::async,
                                     [algo = opt.algo, env = opt.env_name, cfg,
                                      d = cell.dir, meta] {
                                         return run_training(algo, env, cfg, d, meta);
                                     });
        }

    std::vector<double> finals(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) finals[i] = cells[i].result.get();

    std::ofstream summary(outdir + "/summary.csv");
    summary << "index,mean_final_return\n";
    std::size_t cell_idx = 0;
    for (double ix : grid) {
        double mean = 0.0;
        for (std::size_t s = 0; s < seeds.size(); ++s) mean += finals[cell_idx++];
        mean /= static_cast<double>(seeds.size());
        summary << maxent::format_double(ix) << ',' << maxent::format_double(mean) << '\n';
    }
    std::cout << "sweep complete: " << cells.size() << " cells, summary at " << outdir
              << "/summary.csv\n";
    return 0;
}

int cmd_eval(const std::string& snapshot, const std::string& env_name, int episodes,
             std::uint64_t seed) {
    auto env = maxent::make_env(env_name);
    json j = maxent::read_json_file(snapshot);
    maxent::TrainerConfig cfg;
    maxent::Rng rng(maxent::derive_seed(seed, "eval"));
    double mean = 0.0, sd = 0.0;
    if (j.contains("members")) {
        maxent::EnsembleAgent ens = maxent::ensemble_from_json(j, cfg);
        std::tie(mean, sd) = maxent::evaluate_ensemble(*env, ens, episodes, rng);
    } else {
        maxent::AgentState agent = maxent::agent_from_json(j, cfg);
        std::tie(mean, sd) = maxent::evaluate_policy(*env, agent, episodes, rng);
    }
    std::cout << "episodes=" << episodes << " return_mean=" << maxent::format_double(mean)
              << " return_std=" << maxent::format_double(sd) << "\n";
    return 0;
}

int cmd_verify_tabular(const maxent::TabularVerifyOptions& opts) {
    maxent::TabularVerifyReport report = maxent::verify_tabular(opts);
    for (const auto& prop : report.properties)
        std::cout << (prop.passed ? "PASS" : "FAIL") << " - " << prop.name
                  << (prop.detail.empty() ? "" : " (" + prop.detail + ")") << "\n";
    return report.all_passed() ? 0 : 1;
}

int cmd_bounds(maxent::BoundParams params, const std::string& q_grid_text,
               const std::string& eta_grid_text, double q_standard,
               const std::string& outdir_raw) {
    const std::string outdir = resolve_outdir(outdir_raw);
    fs::create_directories(outdir);
    const std::vector<double> q_grid = parse_grid(q_grid_text);
    const std::vector<double> eta_grid = parse_grid(eta_grid_text);

    std::ofstream tsallis_csv(outdir + "/zeta_tsallis.csv");
    tsallis_csv << "q,zeta_tsallis\n";
    std::ofstream prop5(outdir + "/prop5_bounds.csv");
    prop5 << "measure,index,zeta,q_standard,gamma,lower_bound\n";
    for (double q : q_grid) {
        maxent::BoundParams p = params;
        p.measure = q == 1.0 ? maxent::EntropyMeasure::shannon()
                             : maxent::EntropyMeasure::tsallis(q);
        const double z = maxent::zeta_tsallis(p);
        tsallis_csv << maxent::format_double(q) << ',' << maxent::format_double(z) << '\n';
        prop5 << "tsallis," << maxent::format_double(q) << ',' << maxent::format_double(z)
              << ',' << maxent::format_double(q_standard) << ','
              << maxent::format_double(p.gamma) << ','
              << maxent::format_double(maxent::lower_bound(p, q_standard)) << '\n';
    }

    std::ofstream renyi_csv(outdir + "/zeta_renyi.csv");
    renyi_csv << "eta,zeta_renyi\n";
    for (double eta : eta_grid) {
        maxent::BoundParams p = params;
        p.measure = maxent::EntropyMeasure::renyi(eta);
        const double z = maxent::zeta_renyi(p);
        renyi_csv << maxent::format_double(eta) << ',' << maxent::format_double(z) << '\n';
        prop5 << "renyi," << maxent::format_double(eta) << ',' << maxent::format_double(z)
              << ',' << maxent::format_double(q_standard) << ','
              << maxent::format_double(p.gamma) << ','
              << maxent::format_double(maxent::lower_bound(p, q_standard)) << '\n';
    }
    std::cout << "bounds written to " << outdir << "\n";
    return 0;
}

int cmd_ensemble_mc(const std::string& l_text, long trials, double sigma_star,
                    double zeta, double xi, double abar, std::uint64_t seed,
                    const std::string& out_path_raw) {
    const std::string out_path = resolve_outdir(out_path_raw);
    if (fs::path(out_path).has_parent_path())
        fs::create_directories(fs::path(out_path).parent_path());
    const std::vector<int> l_values = parse_int_list(l_text);
    auto rows = maxent::ensemble_dominance_mc(l_values, sigma_star, zeta, xi, abar,
                                              trials, seed);
    std::ofstream out(out_path);
    out << "L,expected_Q,gap\n";
    for (const auto& row : rows)
        out << row.L << ',' << maxent::format_double(row.expected_q) << ','
            << maxent::format_double(row.gap) << '\n';
    std::cout << "ensemble-mc written to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maximum general entropy actor-critic toolkit"};
    app.require_subcommand(1);

    TrainCli train_opt;
    CLI::App* train_cmd = app.add_subcommand("train", "train one agent or ensemble");
    add_train_options(train_cmd, train_opt);

    TrainCli sweep_opt;
    std::string sweep_grid, sweep_seeds = "0";
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "entropic-index x seed grid");
    add_train_options(sweep_cmd, sweep_opt);
    sweep_cmd->add_option("--grid", sweep_grid, "comma list of entropic indices")->required();
    sweep_cmd->add_option("--seeds", sweep_seeds, "comma list of seeds");

    std::string eval_snapshot, eval_env;
    int eval_episodes = 10;
    std::uint64_t eval_seed = 0;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a stored snapshot");
    eval_cmd->add_option("--snapshot", eval_snapshot, "snapshot.json path")->required();
    eval_cmd->add_option("--env", eval_env)->required();
    eval_cmd->add_option("--episodes", eval_episodes);
    eval_cmd->add_option("--seed", eval_seed);

    maxent::TabularVerifyOptions verify_opts;
    CLI::App* verify_cmd =
        app.add_subcommand("verify-tabular", "policy-iteration property suite");
    verify_cmd->add_option("--mdps", verify_opts.num_mdps);
    verify_cmd->add_option("--max-states", verify_opts.max_states);
    verify_cmd->add_option("--max-actions", verify_opts.max_actions);
    verify_cmd->add_option("--seed", verify_opts.seed);
    verify_cmd->add_option("--tol", verify_opts.tol);
    verify_cmd->add_option("--monotone-tol", verify_opts.monotone_tol);
    verify_cmd->add_flag("--inject-fault", verify_opts.inject_fault,
                         "corrupt one improvement step; the audit must flag it");

    maxent::BoundParams bound_params;
    std::string q_grid = "1.0:3.0:0.1", eta_grid = "1.1:3.1:0.1",
                bounds_outdir = "bounds_out";
    double q_standard = 0.0;
    CLI::App* bounds_cmd = app.add_subcommand("bounds", "performance-bound grids");
    bounds_cmd->add_option("--q-grid", q_grid, "start:stop:step");
    bounds_cmd->add_option("--eta-grid", eta_grid, "start:stop:step");
    bounds_cmd->add_option("--xi-lo", bound_params.xi_lo);
    bounds_cmd->add_option("--xi-hi", bound_params.xi_hi);
    bounds_cmd->add_option("--zeta-lo", bound_params.zeta_lo);
    bounds_cmd->add_option("--zeta-hi", bound_params.zeta_hi);
    bounds_cmd->add_option("--sigma-star", bound_params.sigma_star);
    bounds_cmd->add_option("--alpha", bound_params.alpha);
    bounds_cmd->add_option("--gamma", bound_params.gamma);
    bounds_cmd->add_option("--q-standard", q_standard);
    bounds_cmd->add_option("--outdir", bounds_outdir);

    std::string mc_l = "1,2,4,8,16,32,64", mc_out = "ensemble_mc.csv";
    long mc_trials = 1000000;
    double mc_sigma = 1.0, mc_zeta = 1.0, mc_xi = 1.0, mc_abar = 0.0;
    std::uint64_t mc_seed = 0;
    CLI::App* mc_cmd =
        app.add_subcommand("ensemble-mc", "joint-policy dominance Monte Carlo");
    mc_cmd->add_option("--L", mc_l, "comma list of ensemble sizes");
    mc_cmd->add_option("--trials", mc_trials);
    mc_cmd->add_option("--sigma-star", mc_sigma);
    mc_cmd->add_option("--zeta", mc_zeta);
    mc_cmd->add_option("--xi", mc_xi);
    mc_cmd->add_option("--abar", mc_abar);
    mc_cmd->add_option("--seed", mc_seed);
    mc_cmd->add_option("--out", mc_out, "output CSV path");

    CLI::App* list_cmd = app.add_subcommand("list-envs", "list built-in environments");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_cmd, train_opt, argc, argv);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_cmd, sweep_opt, sweep_grid, sweep_seeds, argc, argv);
        if (eval_cmd->parsed())
            return cmd_eval(eval_snapshot, eval_env, eval_episodes, eval_seed);
        if (verify_cmd->parsed()) return cmd_verify_tabular(verify_opts);
        if (bounds_cmd->parsed())
            return cmd_bounds(bound_params, q_grid, eta_grid, q_standard, bounds_outdir);
        if (mc_cmd->parsed())
            return cmd_ensemble_mc(mc_l, mc_trials, mc_sigma, mc_zeta, mc_xi, mc_abar,
                                   mc_seed, mc_out);
        if (list_cmd->parsed()) {
            for (const auto& spec : maxent::env_registry())
                std::cout << spec.name << "  state_dim=" << spec.state_dim
                          << " action_dim=" << spec.action_dim
                          << " max_steps=" << spec.max_episode_steps << "  "
                          << spec.description << "\n";
            return 0;
        }
    } catch (const maxent::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!e.snapshot_path.empty())
            std::cerr << "diagnostic snapshot: " << e.snapshot_path << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
