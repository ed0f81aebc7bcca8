#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bidesp/bitvec.hpp"

namespace bidesp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

enum class CostMode { NegLogPlausibility, Unit };

inline CostMode cost_mode_from_string(const std::string& s) {
    if (s == "neg_log") return CostMode::NegLogPlausibility;
    if (s == "unit") return CostMode::Unit;
    throw InputError("unknown cost mode: " + s);
}

inline std::string to_string(CostMode m) {
    return m == CostMode::Unit ? "unit" : "neg_log";
}

struct Molecule {
    std::string id;
    int size = 1;          // heavy-atom analog
    bool buyable = false;
    BitVec fingerprint;
};

struct TemplateDef {
    std::string id;
    int arity = 1;         // 1 or 2
    BitVec fingerprint;
};

struct Reaction {
    std::string id;
    std::vector<std::string> reactants;  // sorted, distinct, nonempty
    std::string product;
    std::string template_id;
    double plausibility = 1.0;           // in (0, 1]

    double cost(CostMode mode) const {
        return mode == CostMode::Unit ? 1.0 : -std::log(plausibility);
    }
};

enum class Provenance { Top, Bottom };

struct RouteStep {
    Reaction reaction;
    Provenance provenance = Provenance::Top;
};

// A synthetic route: a set of reactions (deduplicated by reaction id) whose
// induced bipartite molecule/reaction graph must be a DAG with a single
// producing reaction per molecule.
struct Route {
    std::vector<RouteStep> steps;

    bool empty() const { return steps.empty(); }
    std::size_t size() const { return steps.size(); }
};

struct ValidityReport {
    bool valid = true;
    std::vector<std::string> violated;  // subset of {C1,C2,C3,C4,DAG}
};

namespace detail {

inline void add_violation(ValidityReport& rep, const std::string& tag) {
    if (std::find(rep.violated.begin(), rep.violated.end(), tag) ==
        rep.violated.end())
        rep.violated.push_back(tag);
    rep.valid = false;
}

// True when the molecule/reaction graph induced by the route is acyclic and
// no molecule is produced by two different reactions.
inline bool route_is_dag(const Route& route) {
    std::unordered_map<std::string, std::size_t> producer;
    for (std::size_t i = 0; i < route.steps.size(); ++i) {
        const auto& r = route.steps[i].reaction;
        auto [it, fresh] = producer.emplace(r.product, i);
        if (!fresh) return false;  // duplicate producer
    }
    // Edges run product -> reactants (through the reaction node); a cycle
    // exists iff some molecule depends on itself.
    std::unordered_map<std::string, int> state;  // 0 new, 1 open, 2 done
    std::vector<std::pair<std::string, std::size_t>> stack;
    for (const auto& [mol, idx] : producer) {
        if (state[mol]) continue;
        stack.push_back({mol, 0});
        state[mol] = 1;
        while (!stack.empty()) {
            auto& [cur, next] = stack.back();
            auto pit = producer.find(cur);
            const auto* rxn =
                pit == producer.end() ? nullptr : &route.steps[pit->second].reaction;
            if (!rxn || next >= rxn->reactants.size()) {
                state[cur] = 2;
                stack.pop_back();
                continue;
            }
            const std::string& child = rxn->reactants[next++];
            int& st = state[child];
            if (st == 1) return false;
            if (st == 0) {
                st = 1;
                stack.push_back({child, 0});
            }
        }
    }
    return true;
}

} // namespace detail

// Checks constraints in order DAG, C1, C2, C3 (C4 is realized as the s.m.
// exemption inside C1) and reports every violation, not just the first.
// `sms`: candidate starting materials; the route must use at least one.
inline ValidityReport validate_route(
    const Route& route, const std::string& target,
    const std::unordered_set<std::string>& buyables,
    const std::vector<std::string>& sms = {},
    const std::unordered_set<std::string>* known_ids = nullptr) {
    if (route.empty()) throw InputError("validate_route: empty route");
    if (known_ids) {
        auto check = [&](const std::string& id) {
            if (!known_ids->count(id))
                throw InputError("validate_route: unresolvable molecule id " + id);
        };
        check(target);
        for (const auto& s : sms) check(s);
        for (const auto& step : route.steps) {
            check(step.reaction.product);
            for (const auto& r : step.reaction.reactants) check(r);
        }
    }

    ValidityReport rep;
    if (!detail::route_is_dag(route)) detail::add_violation(rep, "DAG");

    std::unordered_set<std::string> produced;
    std::unordered_set<std::string> consumed;
    for (const auto& step : route.steps) {
        produced.insert(step.reaction.product);
        for (const auto& r : step.reaction.reactants) consumed.insert(r);
    }
    std::unordered_set<std::string> sm_set(sms.begin(), sms.end());

    // C1: every non-buyable reactant (s.m. exempt, per C4) is produced.
    for (const auto& m : consumed) {
        if (buyables.count(m) || sm_set.count(m)) continue;
        if (!produced.count(m)) {
            detail::add_violation(rep, "C1");
            break;
        }
    }
    // C2: target produced and never consumed.
    if (!produced.count(target) || consumed.count(target))
        detail::add_violation(rep, "C2");
    // C3: some s.m. consumed and that s.m. never produced.
    if (!sms.empty()) {
        bool ok = false;
        for (const auto& s : sms)
            if (consumed.count(s) && !produced.count(s)) { ok = true; break; }
        if (!ok) detail::add_violation(rep, "C3");
    }
    return rep;
}

inline ValidityReport validate_route(
    const Route& route, const std::string& target,
    const std::unordered_set<std::string>& buyables,
    const std::optional<std::string>& sm,
    const std::unordered_set<std::string>* known_ids = nullptr) {
    std::vector<std::string> sms;
    if (sm) sms.push_back(*sm);
    return validate_route(route, target, buyables, sms, known_ids);
}

inline double route_cost(const Route& route, CostMode mode) {
    double total = 0.0;
    for (const auto& step : route.steps) total += step.reaction.cost(mode);
    return total;
}

// Reaction count of the longest target-to-leaf path.
inline int route_depth(const Route& route) {
    std::unordered_map<std::string, const Reaction*> producer;
    for (const auto& step : route.steps)
        producer[step.reaction.product] = &step.reaction;
    std::unordered_map<std::string, int> memo;
    // Non-recursive DFS over the producer DAG.
    std::vector<std::pair<std::string, std::size_t>> stack;
    auto depth_of = [&](const std::string& root) -> int {
        if (auto it = memo.find(root); it != memo.end()) return it->second;
        stack.push_back({root, 0});
        while (!stack.empty()) {
            auto& [cur, next] = stack.back();
            auto pit = producer.find(cur);
            if (pit == producer.end()) {
                memo[cur] = 0;
                stack.pop_back();
                continue;
            }
            const Reaction* rxn = pit->second;
            if (next < rxn->reactants.size()) {
                const std::string& child = rxn->reactants[next++];
                if (!memo.count(child)) stack.push_back({child, 0});
                continue;
            }
            int best = 0;
            for (const auto& r : rxn->reactants) best = std::max(best, memo[r]);
            memo[cur] = best + 1;
            stack.pop_back();
        }
        return memo[root];
    };
    // Depth is measured from the route targets (produced, never consumed).
    std::unordered_set<std::string> consumed;
    for (const auto& step : route.steps)
        for (const auto& r : step.reaction.reactants) consumed.insert(r);
    int best = 0;
    for (const auto& [mol, rxn] : producer)
        if (!consumed.count(mol)) best = std::max(best, depth_of(mol));
    return best;
}

inline std::pair<int, int> count_provenance(const Route& route) {
    int top = 0, bottom = 0;
    for (const auto& step : route.steps)
        (step.provenance == Provenance::Top ? top : bottom)++;
    return {top, bottom};
}

// Result of one planning run; serialized by the bench module.
struct PlanResult {
    std::string algo;
    std::string instance_id;
    bool solved = false;
    std::optional<int> iterations_to_solve;  // empty when unsolved
    int expansions_used = 0;
    std::optional<Route> route;
    double route_cost = 0.0;
    int route_reactions = 0;
    int route_depth = 0;
    int forward_reactions = 0;
    double wall_ms = 0.0;
    std::uint64_t seed = 0;
};

} // namespace bidesp
