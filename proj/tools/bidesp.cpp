// Command-line front end: network generation, distance-pair extraction,
// single-instance planning, the benchmark matrix, and oracle queries.
// Exit codes: 0 success, 1 usage error, 2 data/runtime error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bidesp/baselines.hpp"
#include "bidesp/bench.hpp"
#include "bidesp/desp.hpp"
#include "bidesp/oracle.hpp"

using namespace bidesp;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

struct PlanOptions {
    std::string network_file;
    std::string target;
    std::string sm;
    std::string algo = "desp_f2e";
    std::string out;
    std::string trace_file;
    int budget = 500;
    int top_depth = 11;
    int bottom_depth = 6;
    int lambda = 2;
    int n1 = 50;
    int n2 = 25;
    int k_bb = 2;
    double hide_prob = 0.0;
    double noise_sigma = 0.0;
    int d_max = 9;
    std::uint64_t model_seed = 0;
    std::uint64_t seed = 0;
    std::string cost_mode = "neg_log";
    std::string heuristic = "exact";
    bool met_true_cost = false;
};

int cmd_plan(const PlanOptions& opt) {
    auto net = ReactionNetwork::load(opt.network_file);
    ModelConfig mc;
    mc.hide_prob = opt.hide_prob;
    mc.noise_sigma = opt.noise_sigma;
    mc.d_max = opt.d_max;
    mc.seed = opt.model_seed;
    ModelSuite models(net, mc);
    CostMode mode = cost_mode_from_string(opt.cost_mode);
    HeuristicSource heuristic = heuristic_from_string(opt.heuristic);

    SearchBudget budget;
    budget.max_expansions = opt.budget;
    budget.max_depth = opt.top_depth;
    budget.templates_per_expansion = opt.n1;

    std::optional<std::string> sm;
    if (!opt.sm.empty()) sm = opt.sm;

    std::vector<TraceEvent> trace;
    PlanResult res;
    if (opt.algo == "retrostar") {
        res = run_retrostar(net, models, opt.target, sm, budget, mode, heuristic,
                            SelectPolicy::ByVt, opt.seed, &trace);
    } else if (opt.algo == "random") {
        if (!sm) throw InputError("random baseline requires --sm");
        res = random_search(net, models, opt.target, *sm, budget, mode, heuristic,
                            opt.seed, &trace);
    } else if (opt.algo == "bfs") {
        if (!sm) throw InputError("bfs baseline requires --sm");
        res = bfs_search(net, models, opt.target, *sm, budget, mode, heuristic,
                         opt.seed, &trace);
    } else {
        if (!sm) throw InputError(opt.algo + " requires --sm");
        std::vector<std::pair<std::string, BitVec>> items;
        for (const auto& m : net.molecules())
            if (m.buyable) items.push_back({m.id, m.fingerprint});
        VectorIndex index = VectorIndex::build(items, IndexMode::Exact);
        DespConfig dc;
        dc.lambda = opt.lambda;
        dc.n1 = opt.n1;
        dc.n2 = opt.n2;
        dc.k_bb = opt.k_bb;
        dc.top_depth = opt.top_depth;
        dc.bottom_depth = opt.bottom_depth;
        dc.max_expansions = opt.budget;
        dc.cost_mode = mode;
        dc.heuristic = heuristic;
        dc.met_true_cost = opt.met_true_cost;
        if (opt.algo == "desp_f2e")
            dc.strategy = DespStrategy::F2E;
        else if (opt.algo == "desp_f2f")
            dc.strategy = DespStrategy::F2F;
        else if (opt.algo == "retrostar_d")
            dc.strategy = DespStrategy::RetroStarPlusD;
        else if (opt.algo == "bibfs")
            dc.strategy = DespStrategy::BiBfs;
        else
            throw InputError("unknown algorithm: " + opt.algo);
        res = run_desp(net, models, index, opt.target, *sm, dc, opt.seed, &trace);
    }

    // Route file schema ({target, sm, reactions}) at the top level, with run
    // provenance merged in.
    nlohmann::json out =
        res.route ? route_to_json(*res.route, opt.target, sm)
                  : nlohmann::json{{"target", opt.target},
                                   {"sm", sm ? nlohmann::json(*sm) : nlohmann::json()},
                                   {"reactions", nlohmann::json::array()}};
    out["algo"] = opt.algo;
    out["solved"] = res.solved;
    out["expansions_used"] = res.expansions_used;
    if (res.iterations_to_solve)
        out["iterations_to_solve"] = *res.iterations_to_solve;
    else
        out["iterations_to_solve"] = nullptr;
    out["seed"] = opt.seed;
    out["config"] = {{"budget", opt.budget},
                     {"cost_mode", opt.cost_mode},
                     {"heuristic", opt.heuristic},
                     {"hide_prob", opt.hide_prob},
                     {"noise_sigma", opt.noise_sigma},
                     {"d_max", opt.d_max},
                     {"model_seed", opt.model_seed},
                     {"lambda", opt.lambda}};
    if (res.route) {
        out["route_cost"] = res.route_cost;
        out["route_reactions"] = res.route_reactions;
        out["route_depth"] = res.route_depth;
        out["forward_reactions"] = res.forward_reactions;
    }
    if (opt.out.empty())
        std::cout << out.dump(2) << "\n";
    else
        write_json(out, opt.out);
    if (!opt.trace_file.empty()) {
        nlohmann::json tj = nlohmann::json::array();
        for (const auto& e : trace)
            tj.push_back({{"cycle", e.cycle},
                          {"side", std::string(1, e.side)},
                          {"selected", e.selected},
                          {"policy", e.policy}});
        write_json(nlohmann::json{{"seed", opt.seed}, {"events", tj}},
                   opt.trace_file);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Starting-material-constrained synthesis planning over "
                 "synthetic reaction networks"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a seeded reaction network");
    std::string gen_config_file, gen_out = "network.json";
    NetworkGenConfig gen_cfg;
    gen->add_option("--config", gen_config_file, "Generator config JSON");
    gen->add_option("--out", gen_out, "Output network file");
    gen->add_option("--layers", gen_cfg.layers, "Layer count");
    gen->add_option("--per-layer", gen_cfg.molecules_per_layer, "Molecules per layer");
    gen->add_option("--bb-extra", gen_cfg.bb_extra_fraction,
                    "Extra buyable fraction in upper layers");
    gen->add_option("--max-producers", gen_cfg.max_producers_per_molecule,
                    "Max producing reactions per molecule");
    gen->add_option("--bimolecular", gen_cfg.bimolecular_fraction,
                    "Bimolecular reaction fraction");
    gen->add_option("--bb-partner-prob", gen_cfg.bb_partner_prob,
                    "Probability a bimolecular partner is drawn from buyables");
    gen->add_option("--fingerprint-bits", gen_cfg.fingerprint_bits, "Fingerprint width");
    gen->add_option("--seed", gen_cfg.seed, "Generator seed");

    // extract
    auto* extract = app.add_subcommand("extract", "Extract distance training pairs");
    std::string ex_net, ex_out = "pairs.csv";
    double ex_dcap = 9.0, ex_sim = 0.7;
    int ex_negatives = 1;
    std::uint64_t ex_seed = 0;
    extract->add_option("--network", ex_net, "Network file")->required();
    extract->add_option("--out", ex_out, "Output CSV");
    extract->add_option("--d-cap", ex_dcap, "Largest finite distance to emit");
    extract->add_option("--negatives", ex_negatives, "Negative samples per target");
    extract->add_option("--sim-threshold", ex_sim, "Tanimoto cutoff for negatives");
    extract->add_option("--seed", ex_seed, "Sampling seed");

    // plan
    auto* plan = app.add_subcommand("plan", "Plan a single instance");
    PlanOptions po;
    plan->add_option("--network", po.network_file, "Network file")->required();
    plan->add_option("--target", po.target, "Target molecule id")->required();
    plan->add_option("--sm", po.sm, "Starting material id");
    plan->add_option("--algo", po.algo,
                     "retrostar|retrostar_d|desp_f2e|desp_f2f|random|bfs|bibfs");
    plan->add_option("--budget", po.budget, "Max expansions");
    plan->add_option("--out", po.out, "Route JSON output (default: stdout)");
    plan->add_option("--trace", po.trace_file, "Trace JSON output");
    plan->add_option("--lambda", po.lambda, "Top cycles per bottom cycle");
    plan->add_option("--n1", po.n1, "Retro templates per expansion");
    plan->add_option("--n2", po.n2, "Forward templates per expansion");
    plan->add_option("--k-bb", po.k_bb, "Building blocks per bimolecular template");
    plan->add_option("--top-depth", po.top_depth, "Top depth limit");
    plan->add_option("--bottom-depth", po.bottom_depth, "Bottom depth limit");
    plan->add_option("--hide-prob", po.hide_prob, "Hidden-reaction probability");
    plan->add_option("--noise-sigma", po.noise_sigma, "Distance noise sigma");
    plan->add_option("--d-max", po.d_max, "Distance clipping bound");
    plan->add_option("--model-seed", po.model_seed, "Model seed");
    plan->add_option("--seed", po.seed, "Run seed");
    plan->add_option("--cost-mode", po.cost_mode, "neg_log|unit");
    plan->add_option("--heuristic", po.heuristic, "exact|noisy|zero");
    plan->add_flag("--met-true-cost", po.met_true_cost,
                   "Credit met nodes with their bottom path cost");

    // bench
    auto* bench = app.add_subcommand("bench", "Run the benchmark matrix");
    std::string bench_config_file, bench_out = "results.csv",
                bench_summary = "summary.json", bench_net_override;
    bench->add_option("--config", bench_config_file, "Bench config JSON")->required();
    bench->add_option("--network", bench_net_override, "Override network file");
    bench->add_option("--out", bench_out, "Results CSV");
    bench->add_option("--summary", bench_summary, "Summary JSON");

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "Exact optimal route query");
    std::string or_net, or_target, or_sm, or_out, or_mode = "neg_log";
    oracle_cmd->add_option("--network", or_net, "Network file")->required();
    oracle_cmd->add_option("--target", or_target, "Target molecule id")->required();
    oracle_cmd->add_option("--sm", or_sm, "Starting material id");
    oracle_cmd->add_option("--mode", or_mode, "neg_log|unit");
    oracle_cmd->add_option("--out", or_out, "Route JSON output (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) {
            if (!gen_config_file.empty())
                gen_cfg = gen_config_from_json(load_json(gen_config_file));
            auto net = ReactionNetwork::generate(gen_cfg);
            net.save(gen_out);
            std::cout << "wrote " << gen_out << " (" << net.molecules().size()
                      << " molecules, " << net.reactions().size() << " reactions, "
                      << net.buyables().size() << " buyable)\n";
        } else if (extract->parsed()) {
            auto net = ReactionNetwork::load(ex_net);
            auto records = extract_pairs(net, ex_dcap, ex_negatives, ex_sim, ex_seed);
            write_pairs_csv(records, ex_out);
            std::cout << "wrote " << ex_out << " (" << records.size() << " pairs)\n";
        } else if (plan->parsed()) {
            return cmd_plan(po);
        } else if (bench->parsed()) {
            BenchConfig cfg = bench_config_from_json(load_json(bench_config_file));
            if (!bench_net_override.empty()) cfg.network_file = bench_net_override;
            if (cfg.network_file.empty())
                throw InputError("bench: no network file in config or --network");
            auto net = ReactionNetwork::load(cfg.network_file);
            auto instances = make_instances(net, cfg.instance_count, cfg.seed,
                                            cfg.cost_mode, cfg.min_depth);
            auto results = run_matrix(net, instances, cfg);
            write_results_csv(results, bench_out);
            auto summary = aggregate(results, instances, net, cfg.budgets);
            summary["config"] = bench_config_to_json(cfg);
            write_json(summary, bench_summary);
            for (const auto& e : results.errors)
                std::cerr << "run failed: " << e << "\n";
            std::cout << "wrote " << bench_out << " and " << bench_summary << " ("
                      << results.rows.size() << " runs, " << results.errors.size()
                      << " failures)\n";
        } else if (oracle_cmd->parsed()) {
            auto net = ReactionNetwork::load(or_net);
            CostMode mode = cost_mode_from_string(or_mode);
            std::optional<std::string> sm;
            if (!or_sm.empty()) sm = or_sm;
            auto opt = optimal_route(net, or_target, mode, sm);
            nlohmann::json out;
            out["target"] = or_target;
            out["sm"] = sm ? nlohmann::json(*sm) : nlohmann::json();
            out["mode"] = or_mode;
            out["satisfiable"] = opt.has_value();
            if (opt) {
                out["cost"] = opt->second;
                out["route"] = route_to_json(opt->first, or_target, sm);
            }
            if (or_out.empty())
                std::cout << out.dump(2) << "\n";
            else
                write_json(out, or_out);
        }
    } catch (const ContractViolation& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
