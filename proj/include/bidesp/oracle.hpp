#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bidesp/core.hpp"
#include "bidesp/distance.hpp"
#include "bidesp/network.hpp"

namespace bidesp {

struct EnumCaps {
    int max_depth = 12;
    int max_reactions = 24;
};

namespace detail {

// Recursive assignment enumeration: each open molecule picks a producer (or
// stays a leaf when buyable), processed in sorted order so every reaction set
// is generated exactly once. Buyable molecules may also be decomposed, which
// matters for through-route queries where the source sits beneath a buyable.
class RouteEnumerator {
public:
    RouteEnumerator(const ReactionNetwork& net, const EnumCaps& caps)
        : net_(net), caps_(caps) {}

    std::vector<Route> enumerate(const std::string& target) {
        net_.molecule(target);
        routes_.clear();
        seen_.clear();
        std::map<std::string, const Reaction*> chosen;
        std::set<std::string> open{target};
        descend(target, chosen, open, /*root=*/true);
        return routes_;
    }

private:
    // depth of mol within the partial route = longest chain to it; we track
    // per-molecule depth implicitly by recomputation when emitting.
    void descend(const std::string& target,
                 std::map<std::string, const Reaction*>& chosen,
                 std::set<std::string>& open, bool root) {
        if (open.empty()) {
            emit(target, chosen);
            return;
        }
        std::string mol = *open.begin();
        open.erase(open.begin());
        const Molecule& m = net_.molecule(mol);
        const bool is_root = root && mol == target;

        // Option A: leave it as a buyable leaf (the target itself must be
        // produced, so the root never takes this branch).
        if (m.buyable && !is_root) descend(target, chosen, open, false);

        // Option B: pick each producer in id order.
        if (static_cast<int>(chosen.size()) < caps_.max_reactions) {
            std::vector<const Reaction*> producers = net_.producers_of(mol);
            std::sort(producers.begin(), producers.end(),
                      [](const Reaction* a, const Reaction* b) {
                          return a->id < b->id;
                      });
            for (const Reaction* r : producers) {
                if (creates_cycle(r, chosen)) continue;
                chosen.emplace(mol, r);
                std::vector<std::string> added;
                bool feasible = true;
                for (const auto& x : r->reactants) {
                    if (chosen.count(x) || open.count(x)) continue;
                    const Molecule& xm = net_.molecule(x);
                    if (!xm.buyable && net_.producers_of(x).empty()) {
                        feasible = false;
                        break;
                    }
                    open.insert(x);
                    added.push_back(x);
                }
                if (feasible && depth_ok(target, chosen))
                    descend(target, chosen, open, false);
                for (const auto& x : added) open.erase(x);
                chosen.erase(mol);
            }
        }
        open.insert(mol);
    }

    bool creates_cycle(const Reaction* r,
                       const std::map<std::string, const Reaction*>& chosen) const {
        // Generated networks are acyclic, but hand-built inputs may not be;
        // check the partial assignment directly.
        for (const auto& x : r->reactants) {
            std::vector<std::string> stack{x};
            std::unordered_set<std::string> seen;
            while (!stack.empty()) {
                std::string cur = stack.back();
                stack.pop_back();
                if (cur == r->product) return true;
                if (!seen.insert(cur).second) continue;
                auto it = chosen.find(cur);
                if (it != chosen.end())
                    for (const auto& y : it->second->reactants) stack.push_back(y);
            }
        }
        return false;
    }

    bool depth_ok(const std::string& target,
                  const std::map<std::string, const Reaction*>& chosen) const {
        std::unordered_map<std::string, int> memo;
        return depth_of(target, chosen, memo) <= caps_.max_depth;
    }

    int depth_of(const std::string& mol,
                 const std::map<std::string, const Reaction*>& chosen,
                 std::unordered_map<std::string, int>& memo) const {
        auto it = memo.find(mol);
        if (it != memo.end()) return it->second;
        auto ch = chosen.find(mol);
        if (ch == chosen.end()) return memo[mol] = 0;
        int best = 0;
        for (const auto& x : ch->second->reactants)
            best = std::max(best, depth_of(x, chosen, memo));
        return memo[mol] = best + 1;
    }

    void emit(const std::string& target,
              const std::map<std::string, const Reaction*>& chosen) {
        if (chosen.empty()) return;
        // Keep only reactions reachable from the target.
        std::vector<std::string> stack{target};
        std::set<std::string> kept_products;
        Route route;
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            auto it = chosen.find(cur);
            if (it == chosen.end() || kept_products.count(cur)) continue;
            kept_products.insert(cur);
            route.steps.push_back({*it->second, Provenance::Top});
            for (const auto& x : it->second->reactants) stack.push_back(x);
        }
        if (route.empty()) return;
        // The enumeration may assign producers to side molecules that end up
        // unreachable; rooted dedup keys on the surviving reaction set.
        std::set<std::string> key;
        for (const auto& s : route.steps) key.insert(s.reaction.id);
        if (!seen_.insert(key).second) return;
        routes_.push_back(std::move(route));
    }

    const ReactionNetwork& net_;
    EnumCaps caps_;
    std::vector<Route> routes_;
    std::set<std::set<std::string>> seen_;
};

} // namespace detail

// Exhaustive enumeration of valid routes rooted at `target` whose leaves are
// buyable, subject to caps; deduplicated by reaction set. Every emitted route
// passes validate_route without a starting material.
inline std::vector<Route> enumerate_valid_routes(const ReactionNetwork& net,
                                                 const std::string& target,
                                                 const EnumCaps& caps = {}) {
    if (caps.max_depth < 1 || caps.max_reactions < 1)
        throw InputError("enumerate_valid_routes: caps must be positive");
    detail::RouteEnumerator e(net, caps);
    return e.enumerate(target);
}

// Minimum-cost route to `target`; with a starting material the through-branch
// DP guarantees the route contains it. Returns nullopt when unsatisfiable.
// The reconstructed route keeps the s.m. as a leaf (never decomposes it), so
// it validates against Constraints 1-4 whenever the s.m. is buyable.
inline std::optional<std::pair<Route, double>> optimal_route(
    const ReactionNetwork& net, const std::string& target, CostMode mode,
    const std::optional<std::string>& sm = std::nullopt) {
    CostTable vm = compute_vm(net, mode);
    net.molecule(target);

    std::unordered_map<std::string, double> thru;
    if (sm) {
        net.molecule(*sm);
        if (vm.at(*sm) == kInf) return std::nullopt;
        thru = compute_through_costs(net, *sm, mode, vm);
        if (thru.at(target) == kInf) return std::nullopt;
    } else {
        if (vm.at(target) == kInf) return std::nullopt;
    }

    Route route;
    std::unordered_set<std::string> produced;
    // Plain reconstruction by argmin producer, ties by reaction id.
    auto emit_plain = [&](auto&& self, const std::string& mol) -> void {
        if (produced.count(mol)) return;
        const Molecule& m = net.molecule(mol);
        if (m.buyable || (sm && mol == *sm)) return;
        const Reaction* best = nullptr;
        double best_cost = kInf;
        for (const Reaction* r : net.producers_of(mol)) {
            double c = r->cost(mode);
            bool ok = true;
            for (const auto& x : r->reactants) {
                double v = vm.at(x);
                if (v == kInf) { ok = false; break; }
                c += v;
            }
            if (!ok) continue;
            if (c < best_cost || (c == best_cost && best && r->id < best->id)) {
                best = r;
                best_cost = c;
            }
        }
        if (!best) throw ContractViolation("optimal_route: no finite producer");
        produced.insert(mol);
        route.steps.push_back({*best, Provenance::Top});
        for (const auto& x : best->reactants) self(self, x);
    };

    if (!sm) {
        if (vm.at(target) == kInf) return std::nullopt;
        emit_plain(emit_plain, target);
        // Buyable target: already available, zero reactions.
        return std::make_pair(route, route_cost(route, mode));
    }

    // Through-chain reconstruction: walk argmin (producer, through-branch)
    // choices from the target down to the s.m., then fill side branches.
    auto emit_thru = [&](auto&& self, const std::string& mol) -> void {
        if (mol == *sm) return;  // s.m. stays a leaf
        const Reaction* best = nullptr;
        std::string best_branch;
        double best_cost = kInf;
        for (const Reaction* r : net.producers_of(mol)) {
            double base = r->cost(mode);
            bool ok = true;
            for (const auto& x : r->reactants) {
                double v = vm.at(x);
                if (v == kInf) { ok = false; break; }
                base += v;
            }
            if (!ok) continue;
            for (const auto& x : r->reactants) {
                double t = thru.at(x);
                if (t == kInf) continue;
                double cand = base - vm.at(x) + t;
                if (cand < best_cost ||
                    (cand == best_cost && best &&
                     (r->id < best->id ||
                      (r->id == best->id && x < best_branch)))) {
                    best = r;
                    best_branch = x;
                    best_cost = cand;
                }
            }
        }
        if (!best) throw ContractViolation("optimal_route: through chain broke");
        produced.insert(mol);
        route.steps.push_back({*best, Provenance::Top});
        self(self, best_branch);
        for (const auto& x : best->reactants)
            if (x != best_branch) emit_plain(emit_plain, x);
    };
    emit_thru(emit_thru, target);
    return std::make_pair(route, route_cost(route, mode));
}

// True iff a valid route to m2 containing m1 exists. Implemented
// independently of the distance DP: completability fixpoint plus a forward
// closure from m1 whose side reactants must be completable.
inline bool reachable_into(const ReactionNetwork& net, const std::string& m1,
                           const std::string& m2) {
    net.molecule(m1);
    net.molecule(m2);
    std::unordered_set<std::string> completable;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& m : net.molecules()) {
            if (completable.count(m.id)) continue;
            bool ok = m.buyable;
            if (!ok) {
                for (const Reaction* r : net.producers_of(m.id)) {
                    bool all = true;
                    for (const auto& x : r->reactants)
                        if (!completable.count(x)) { all = false; break; }
                    if (all) { ok = true; break; }
                }
            }
            if (ok) {
                completable.insert(m.id);
                changed = true;
            }
        }
    }
    if (!completable.count(m1)) return false;
    if (m1 == m2) return true;

    std::unordered_set<std::string> forward{m1};
    std::vector<std::string> queue{m1};
    std::size_t head = 0;
    while (head < queue.size()) {
        std::string cur = queue[head++];
        for (const Reaction* r : net.consumers_of(cur)) {
            bool ok = true;
            for (const auto& x : r->reactants)
                if (x != cur && !forward.count(x) && !completable.count(x)) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            if (forward.insert(r->product).second) queue.push_back(r->product);
        }
    }
    return forward.count(m2) > 0;
}

} // namespace bidesp
