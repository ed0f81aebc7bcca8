#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bidesp/desp.hpp"
#include "bidesp/retrostar.hpp"

namespace bidesp {

// Uninformed reference searches. All of them reuse the retrostar/desp
// expansion, update, and validation code paths; only node selection (and the
// bi-BFS forward ranking) differ.

inline PlanResult random_search(const ReactionNetwork& net, const ModelSuite& models,
                                const std::string& p_star, const std::string& r_star,
                                const SearchBudget& budget, CostMode mode,
                                HeuristicSource heuristic, std::uint64_t seed,
                                std::vector<TraceEvent>* trace = nullptr) {
    return run_retrostar(net, models, p_star, r_star, budget, mode, heuristic,
                         SelectPolicy::Random, seed, trace);
}

inline PlanResult bfs_search(const ReactionNetwork& net, const ModelSuite& models,
                             const std::string& p_star, const std::string& r_star,
                             const SearchBudget& budget, CostMode mode,
                             HeuristicSource heuristic, std::uint64_t seed,
                             std::vector<TraceEvent>* trace = nullptr) {
    return run_retrostar(net, models, p_star, r_star, budget, mode, heuristic,
                         SelectPolicy::Bfs, seed, trace);
}

// DESP driver with BFS selection on both sides and plausibility-only forward
// ranking: an uninformed control for the value of distance guidance.
inline PlanResult bibfs_search(const ReactionNetwork& net, const ModelSuite& models,
                               const VectorIndex& bb_index, const std::string& p_star,
                               const std::string& r_star, const SearchBudget& budget,
                               int lambda, CostMode mode, HeuristicSource heuristic,
                               std::uint64_t seed,
                               std::vector<TraceEvent>* trace = nullptr) {
    DespConfig cfg;
    cfg.strategy = DespStrategy::BiBfs;
    cfg.lambda = lambda;
    cfg.n1 = budget.templates_per_expansion;
    cfg.top_depth = budget.max_depth;
    cfg.max_expansions = budget.max_expansions;
    cfg.cost_mode = mode;
    cfg.heuristic = heuristic;
    return run_desp(net, models, bb_index, p_star, r_star, cfg, seed, trace);
}

} // namespace bidesp
