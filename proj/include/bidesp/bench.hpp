#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bidesp/baselines.hpp"
#include "bidesp/desp.hpp"
#include "bidesp/oracle.hpp"
#include "bidesp/retrostar.hpp"

namespace bidesp {

struct Instance {
    std::string id;
    std::string p_star;
    std::string r_star;
    Route reference_route;
    int reference_depth = 0;
    double oracle_constrained_cost = 0.0;
};

struct BenchConfig {
    std::string network_file;
    ModelConfig model;
    DespConfig desp;  // lambda/N1/N2/K/depths; strategy field ignored here
    std::vector<std::string> algos{"random",  "bfs",         "bibfs",
                                   "retrostar", "retrostar_d", "desp_f2e",
                                   "desp_f2f"};
    std::vector<int> budgets{10, 30, 50};
    int instance_count = 50;
    int min_depth = 1;
    std::uint64_t seed = 0;
    CostMode cost_mode = CostMode::NegLogPlausibility;
    HeuristicSource heuristic = HeuristicSource::NoisyPredictor;

    void validate() const {
        if (budgets.empty()) throw InputError("bench: budgets must be nonempty");
        for (std::size_t i = 1; i < budgets.size(); ++i)
            if (budgets[i] <= budgets[i - 1])
                throw InputError("bench: budgets must be ascending");
        if (instance_count < 1) throw InputError("bench: instance count must be >= 1");
        if (algos.empty()) throw InputError("bench: no algorithms selected");
    }
};

inline nlohmann::json bench_config_to_json(const BenchConfig& c) {
    return nlohmann::json{
        {"network", c.network_file},
        {"model",
         {{"hide_prob", c.model.hide_prob},
          {"noise_sigma", c.model.noise_sigma},
          {"d_max", c.model.d_max},
          {"seed", c.model.seed}}},
        {"desp",
         {{"lambda", c.desp.lambda},
          {"n1", c.desp.n1},
          {"n2", c.desp.n2},
          {"k_bb", c.desp.k_bb},
          {"top_depth", c.desp.top_depth},
          {"bottom_depth", c.desp.bottom_depth},
          {"met_true_cost", c.desp.met_true_cost}}},
        {"algos", c.algos},
        {"budgets", c.budgets},
        {"instances", c.instance_count},
        {"min_depth", c.min_depth},
        {"seed", c.seed},
        {"cost_mode", to_string(c.cost_mode)},
        {"heuristic", c.heuristic == HeuristicSource::ExactTable ? "exact"
                      : c.heuristic == HeuristicSource::Zero     ? "zero"
                                                                 : "noisy"}};
}

inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
    BenchConfig c;
    try {
        c.network_file = j.value("network", std::string{});
        if (j.contains("model")) {
            const auto& m = j["model"];
            c.model.hide_prob = m.value("hide_prob", c.model.hide_prob);
            c.model.noise_sigma = m.value("noise_sigma", c.model.noise_sigma);
            c.model.d_max = m.value("d_max", c.model.d_max);
            c.model.seed = m.value("seed", c.model.seed);
        }
        if (j.contains("desp")) {
            const auto& d = j["desp"];
            c.desp.lambda = d.value("lambda", c.desp.lambda);
            c.desp.n1 = d.value("n1", c.desp.n1);
            c.desp.n2 = d.value("n2", c.desp.n2);
            c.desp.k_bb = d.value("k_bb", c.desp.k_bb);
            c.desp.top_depth = d.value("top_depth", c.desp.top_depth);
            c.desp.bottom_depth = d.value("bottom_depth", c.desp.bottom_depth);
            c.desp.met_true_cost = d.value("met_true_cost", c.desp.met_true_cost);
        }
        if (j.contains("algos")) c.algos = j["algos"].get<std::vector<std::string>>();
        if (j.contains("budgets")) c.budgets = j["budgets"].get<std::vector<int>>();
        c.instance_count = j.value("instances", c.instance_count);
        c.min_depth = j.value("min_depth", c.min_depth);
        c.seed = j.value("seed", c.seed);
        if (j.contains("cost_mode"))
            c.cost_mode = cost_mode_from_string(j["cost_mode"].get<std::string>());
        if (j.contains("heuristic"))
            c.heuristic = heuristic_from_string(j["heuristic"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    return c;
}

// Instance construction per the goal-leaf rule: take the unconstrained
// optimal route of a sampled non-buyable target, find the leaves at maximal
// depth, and pick the one with the largest size (ties by id). Degenerate
// single-step instances where r* is the only reactant are discarded.
// min_depth keeps only targets whose reference route is at least that deep,
// the synthetic stand-in for benchmark sets stratified by route length.
inline std::vector<Instance> make_instances(const ReactionNetwork& net, int count,
                                            std::uint64_t seed,
                                            CostMode mode = CostMode::NegLogPlausibility,
                                            int min_depth = 1) {
    std::vector<std::string> candidates;
    for (const auto& m : net.molecules())
        if (!m.buyable && !net.producers_of(m.id).empty()) candidates.push_back(m.id);
    Rng rng(seed);
    // Seeded shuffle; sampling without replacement.
    for (std::size_t i = 0; i + 1 < candidates.size(); ++i)
        std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);

    std::vector<Instance> out;
    for (const auto& target : candidates) {
        if (static_cast<int>(out.size()) == count) break;
        auto opt = optimal_route(net, target, mode);
        if (!opt || opt->first.empty()) continue;
        const Route& route = opt->first;

        // Longest path from the target to each leaf of the route DAG.
        std::unordered_map<std::string, const Reaction*> producer;
        for (const auto& s : route.steps) producer[s.reaction.product] = &s.reaction;
        std::unordered_map<std::string, int> depth{{target, 0}};
        std::vector<std::string> order{target};
        for (std::size_t head = 0; head < order.size(); ++head) {
            std::string cur = order[head];
            auto it = producer.find(cur);
            if (it == producer.end()) continue;
            for (const auto& x : it->second->reactants) {
                int d = depth[cur] + 1;
                auto [dit, fresh] = depth.emplace(x, d);
                if (!fresh && dit->second >= d) continue;
                dit->second = d;
                order.push_back(x);
            }
        }
        std::string best_leaf;
        int best_depth = 0;
        int best_size = -1;
        for (const auto& [mol, d] : depth) {
            if (producer.count(mol)) continue;  // not a leaf
            int size = net.molecule(mol).size;
            if (d > best_depth || (d == best_depth && size > best_size) ||
                (d == best_depth && size == best_size && mol < best_leaf)) {
                if (d > best_depth) {
                    best_depth = d;
                    best_size = size;
                    best_leaf = mol;
                } else if (size > best_size ||
                           (size == best_size && (best_leaf.empty() || mol < best_leaf))) {
                    best_size = size;
                    best_leaf = mol;
                }
            }
        }
        if (best_leaf.empty()) continue;
        // Degenerate: single-step route with r* as the only reactant.
        if (route.size() == 1 && route.steps[0].reaction.reactants.size() == 1 &&
            route.steps[0].reaction.reactants[0] == best_leaf)
            continue;
        int ref_depth = route_depth(route);
        if (ref_depth < min_depth) continue;
        auto constrained = optimal_route(net, target, mode,
                                         std::optional<std::string>(best_leaf));
        if (!constrained) continue;

        Instance inst;
        inst.id = "i" + std::to_string(out.size());
        inst.p_star = target;
        inst.r_star = best_leaf;
        inst.reference_route = route;
        inst.reference_depth = ref_depth;
        inst.oracle_constrained_cost = constrained->second;
        out.push_back(std::move(inst));
    }
    if (static_cast<int>(out.size()) < count)
        throw GenerationError("make_instances: not enough eligible targets");
    return out;
}

struct BenchResults {
    std::vector<PlanResult> rows;
    std::vector<std::string> errors;
};

inline int bench_thread_count() {
    if (const char* env = std::getenv("BIDESP_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(hw ? hw : 1u, 8u));
}

// One run per (instance, algo) at the maximum budget; solve rates at lower
// budgets fall out of iterations_to_solve. Rows come back sorted by
// (instance, algo) regardless of worker scheduling.
inline BenchResults run_matrix(const ReactionNetwork& net,
                               const std::vector<Instance>& instances,
                               const BenchConfig& cfg) {
    cfg.validate();
    ModelSuite models(net, cfg.model);
    std::vector<std::pair<std::string, BitVec>> items;
    for (const auto& m : net.molecules())
        if (m.buyable) items.push_back({m.id, m.fingerprint});
    VectorIndex index = VectorIndex::build(items, IndexMode::Exact);

    const int max_budget = cfg.budgets.back();
    SearchBudget budget;
    budget.max_expansions = max_budget;
    budget.max_depth = cfg.desp.top_depth;
    budget.templates_per_expansion = cfg.desp.n1;

    struct Job {
        const Instance* instance;
        std::string algo;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    std::uint64_t counter = 0;
    for (const auto& inst : instances)
        for (const auto& algo : cfg.algos)
            jobs.push_back({&inst, algo, hash_combine(cfg.seed, counter++)});

    BenchResults results;
    results.rows.resize(jobs.size());
    std::vector<std::string> errors(jobs.size());

    auto run_one = [&](const Job& job) -> PlanResult {
        const std::string& p = job.instance->p_star;
        const std::string& r = job.instance->r_star;
        DespConfig dc = cfg.desp;
        dc.max_expansions = max_budget;
        dc.cost_mode = cfg.cost_mode;
        dc.heuristic = cfg.heuristic;
        if (job.algo == "retrostar")
            return run_retrostar(net, models, p, r, budget, cfg.cost_mode,
                                 cfg.heuristic, SelectPolicy::ByVt, job.seed);
        if (job.algo == "random")
            return random_search(net, models, p, r, budget, cfg.cost_mode,
                                 cfg.heuristic, job.seed);
        if (job.algo == "bfs")
            return bfs_search(net, models, p, r, budget, cfg.cost_mode,
                              cfg.heuristic, job.seed);
        if (job.algo == "bibfs")
            return bibfs_search(net, models, index, p, r, budget, cfg.desp.lambda,
                                cfg.cost_mode, cfg.heuristic, job.seed);
        if (job.algo == "retrostar_d") {
            dc.strategy = DespStrategy::RetroStarPlusD;
            return run_desp(net, models, index, p, r, dc, job.seed);
        }
        if (job.algo == "desp_f2e") {
            dc.strategy = DespStrategy::F2E;
            return run_desp(net, models, index, p, r, dc, job.seed);
        }
        if (job.algo == "desp_f2f") {
            dc.strategy = DespStrategy::F2F;
            return run_desp(net, models, index, p, r, dc, job.seed);
        }
        throw InputError("unknown algorithm: " + job.algo);
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            auto t0 = std::chrono::steady_clock::now();
            PlanResult res;
            try {
                res = run_one(job);
            } catch (const std::exception& e) {
                res = PlanResult{};
                res.algo = job.algo;
                res.solved = false;
                errors[i] = job.instance->id + "/" + job.algo + ": " + e.what();
            }
            auto t1 = std::chrono::steady_clock::now();
            res.instance_id = job.instance->id;
            res.algo = job.algo;
            res.seed = job.seed;
            res.wall_ms =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
            results.rows[i] = std::move(res);
        }
    };
    int threads = bench_thread_count();
    if (threads <= 1 || jobs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (!e.empty()) results.errors.push_back(std::move(e));
    // Jobs are generated instance-major and algos in config order; keep that
    // order explicitly stable for the output.
    return results;
}

namespace detail {

inline std::string fmt_double(double v) {
    if (v == kInf) return "inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

} // namespace detail

inline void write_results_csv(const BenchResults& results, std::ostream& out) {
    out << "instance,algo,solved,iterations_to_solve,expansions_used,route_cost,"
           "route_reactions,route_depth,forward_reactions,wall_ms,seed\n";
    for (const auto& r : results.rows) {
        out << r.instance_id << ',' << r.algo << ',' << (r.solved ? 1 : 0) << ',';
        if (r.iterations_to_solve)
            out << *r.iterations_to_solve;
        else
            out << "inf";
        out << ',' << r.expansions_used << ','
            << (r.solved ? detail::fmt_double(r.route_cost) : "") << ','
            << (r.solved ? std::to_string(r.route_reactions) : "") << ','
            << (r.solved ? std::to_string(r.route_depth) : "") << ','
            << (r.solved ? std::to_string(r.forward_reactions) : "") << ','
            << detail::fmt_double(r.wall_ms) << ',' << r.seed << '\n';
    }
}

inline void write_results_csv(const BenchResults& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    write_results_csv(results, out);
}

struct AlgoSummary {
    std::string algo;
    std::unordered_map<int, double> solve_rate;  // per budget
    double mean_expansions = 0.0;
    std::optional<double> route_reactions_mean;   // over commonly solved
    std::optional<double> route_reactions_stdev;
    std::optional<double> mean_forward_reactions;
};

// Per-algo solve rates and expansion means; route-length statistics are
// restricted to instances solved by every algorithm when requested.
inline nlohmann::json aggregate(const BenchResults& results,
                                const std::vector<Instance>& instances,
                                const ReactionNetwork& net,
                                const std::vector<int>& budgets,
                                bool common_solved_only = true) {
    if (results.rows.empty()) throw InputError("aggregate: no results");
    const int max_budget = budgets.back();
    std::vector<std::string> algos;
    for (const auto& r : results.rows) {
        if (std::find(algos.begin(), algos.end(), r.algo) == algos.end())
            algos.push_back(r.algo);
    }
    std::unordered_map<std::string, std::vector<const PlanResult*>> by_algo;
    for (const auto& r : results.rows) by_algo[r.algo].push_back(&r);

    // Instances solved by every algorithm.
    std::unordered_map<std::string, int> solved_count;
    for (const auto& r : results.rows)
        if (r.solved) solved_count[r.instance_id] += 1;
    std::unordered_set<std::string> common;
    for (const auto& [id, n] : solved_count)
        if (n == static_cast<int>(algos.size())) common.insert(id);

    nlohmann::json out;
    out["budgets"] = budgets;
    out["instances"] = instances.size();
    out["common_solved"] = common.size();
    auto& algo_json = out["algos"] = nlohmann::json::object();
    for (const auto& algo : algos) {
        const auto& rows = by_algo[algo];
        nlohmann::json a;
        for (int b : budgets) {
            int solved = 0;
            for (const auto* r : rows)
                if (r->iterations_to_solve && *r->iterations_to_solve <= b) ++solved;
            a["solve_rate"][std::to_string(b)] =
                static_cast<double>(solved) / rows.size();
        }
        double nbar = 0.0;
        for (const auto* r : rows)
            nbar += r->iterations_to_solve
                        ? std::min(*r->iterations_to_solve, max_budget)
                        : max_budget;
        a["mean_expansions"] = nbar / rows.size();
        // Route lengths over the commonly solved intersection.
        std::vector<double> lens, fwd;
        for (const auto* r : rows) {
            if (!r->solved) continue;
            if (common_solved_only && !common.count(r->instance_id)) continue;
            lens.push_back(r->route_reactions);
            fwd.push_back(r->forward_reactions);
        }
        if (!lens.empty()) {
            double mean = 0.0;
            for (double v : lens) mean += v;
            mean /= lens.size();
            double var = 0.0;
            for (double v : lens) var += (v - mean) * (v - mean);
            var = lens.size() > 1 ? var / (lens.size() - 1) : 0.0;
            a["route_reactions_mean"] = mean;
            a["route_reactions_stdev"] = std::sqrt(var);
            double fmean = 0.0;
            for (double v : fwd) fmean += v;
            a["mean_forward_reactions"] = fmean / fwd.size();
        } else {
            a["route_reactions_mean"] = nullptr;
            a["route_reactions_stdev"] = nullptr;
            a["mean_forward_reactions"] = nullptr;
        }
        algo_json[algo] = std::move(a);
    }

    // Size-binned solve rates at max budget (quartile bins over target size).
    std::vector<int> sizes;
    std::unordered_map<std::string, int> inst_size;
    for (const auto& inst : instances) {
        int s = net.molecule(inst.p_star).size;
        sizes.push_back(s);
        inst_size[inst.id] = s;
    }
    std::sort(sizes.begin(), sizes.end());
    auto quantile = [&](double q) {
        return sizes[static_cast<std::size_t>(q * (sizes.size() - 1))];
    };
    std::vector<int> edges{quantile(0.25), quantile(0.5), quantile(0.75)};
    auto bin_of = [&](int size) {
        int b = 0;
        for (int e : edges)
            if (size > e) ++b;
        return b;
    };
    auto& bins_json = out["size_bins"] = nlohmann::json::array();
    for (int b = 0; b < 4; ++b) {
        nlohmann::json bj;
        bj["bin"] = b;
        bj["max_size_edge"] = b < 3 ? nlohmann::json(edges[b]) : nlohmann::json();
        for (const auto& algo : algos) {
            int total = 0, solved = 0;
            for (const auto* r : by_algo[algo]) {
                if (bin_of(inst_size[r->instance_id]) != b) continue;
                ++total;
                if (r->solved) ++solved;
            }
            bj["solve_rate"][algo] =
                total ? static_cast<double>(solved) / total : 0.0;
        }
        bins_json.push_back(std::move(bj));
    }
    return out;
}

// Route file writer/reader (the shared wire format for routes).
inline nlohmann::json route_to_json(const Route& route, const std::string& target,
                                    const std::optional<std::string>& sm) {
    nlohmann::json j;
    j["target"] = target;
    j["sm"] = sm ? nlohmann::json(*sm) : nlohmann::json();
    auto& arr = j["reactions"] = nlohmann::json::array();
    for (const auto& s : route.steps)
        arr.push_back({{"id", s.reaction.id},
                       {"reactants", s.reaction.reactants},
                       {"product", s.reaction.product},
                       {"template", s.reaction.template_id},
                       {"plausibility", s.reaction.plausibility},
                       {"provenance",
                        s.provenance == Provenance::Top ? "top" : "bottom"}});
    return j;
}

inline Route route_from_json(const nlohmann::json& j) {
    Route route;
    try {
        for (const auto& r : j.at("reactions")) {
            RouteStep step;
            step.reaction.id = r.value("id", std::string{});
            step.reaction.reactants = r.at("reactants").get<std::vector<std::string>>();
            std::sort(step.reaction.reactants.begin(), step.reaction.reactants.end());
            step.reaction.product = r.at("product").get<std::string>();
            step.reaction.template_id = r.at("template").get<std::string>();
            step.reaction.plausibility = r.at("plausibility").get<double>();
            step.provenance = r.at("provenance").get<std::string>() == "bottom"
                                  ? Provenance::Bottom
                                  : Provenance::Top;
            route.steps.push_back(std::move(step));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("route file: ") + e.what());
    }
    return route;
}

} // namespace bidesp
