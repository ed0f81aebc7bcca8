#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bidesp/core.hpp"
#include "bidesp/dn_multiset.hpp"
#include "bidesp/models.hpp"
#include "bidesp/network.hpp"

namespace bidesp {

enum class HeuristicSource { ExactTable, NoisyPredictor, Zero };

inline HeuristicSource heuristic_from_string(const std::string& s) {
    if (s == "exact") return HeuristicSource::ExactTable;
    if (s == "noisy") return HeuristicSource::NoisyPredictor;
    if (s == "zero") return HeuristicSource::Zero;
    throw InputError("unknown heuristic source: " + s);
}

struct SearchBudget {
    int max_expansions = 500;
    int max_depth = 11;
    int templates_per_expansion = 50;
};

enum class SelectPolicy { ByVt, ByVtPlusDt, Random, Bfs };

struct TraceEvent {
    int cycle = 0;
    char side = 'T';
    std::string selected;
    std::string policy;
};

struct RxnNode;

enum class MolState { Frontier, Expanded, Dead, Buyable };

struct MolNode {
    std::string id;
    bool buyable = false;
    MolState state = MolState::Frontier;
    int depth = 0;
    double heuristic_rn = 0.0;  // V_m estimate fixed at creation
    double d_m = 0.0;           // cached D(gamma(m), m) prediction
    bool met = false;
    std::vector<RouteStep> met_path;  // bottom chain spliced at stitch time
    double met_path_cost = 0.0;

    double rn = 0.0;
    double vt = 0.0;
    bool proved = false;
    DnMultiset dn, dt;
    bool dt_frozen = false;  // some ancestor on the argmin chain is met
    RxnNode* best_child = nullptr;  // argmin-rn child reaction, ties by id

    std::vector<RxnNode*> parents;
    std::vector<RxnNode*> children;
};

struct RxnNode {
    const Reaction* rxn = nullptr;
    double cost = 0.0;
    MolNode* parent = nullptr;
    std::vector<MolNode*> children;
    double rn = 0.0;
    double vt = 0.0;
    bool proved = false;
    DnMultiset dn, dt;
    bool dt_frozen = false;
};

// Top-down AND-OR search graph with molecule-node deduplication. Molecule
// nodes are OR nodes, reaction nodes AND nodes; cycle-creating expansions are
// rejected so the graph stays a DAG and the update rules remain well-defined.
class SearchGraph {
public:
    // met_true_cost: credit met leaves with their bottom path cost instead of
    // the literal rn <- 0 of the meeting rule.
    SearchGraph(const ReactionNetwork& net, std::string root_id, CostMode mode,
                std::function<double(const std::string&)> heuristic,
                std::function<double(const std::string&)> dm_of = {},
                bool track_dn = false, bool met_true_cost = false)
        : net_(net),
          cost_mode_(mode),
          heuristic_(std::move(heuristic)),
          dm_of_(std::move(dm_of)),
          track_dn_(track_dn),
          met_true_cost_(met_true_cost) {
        root_ = make_molecule(root_id, 0);
        // A buyable root still enters the frontier: constrained instances
        // must decompose the target (Constraint 2).
        if (root_->buyable) root_->state = MolState::Frontier;
        update();
    }

    MolNode* root() { return root_; }
    const MolNode* root() const { return root_; }
    CostMode cost_mode() const { return cost_mode_; }
    bool met_true_cost() const { return met_true_cost_; }

    const std::deque<MolNode>& molecules() const { return mol_nodes_; }
    const std::deque<RxnNode>& reaction_nodes() const { return rxn_nodes_; }

    MolNode* find(const std::string& id) {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : it->second;
    }
    const MolNode* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : it->second;
    }

    bool has_frontier() const {
        for (const auto& m : mol_nodes_)
            if (m.state == MolState::Frontier) return true;
        return false;
    }

    // Frontier argmin under the given policy; nullptr when exhausted.
    MolNode* select(SelectPolicy policy, Rng* rng = nullptr) {
        std::vector<MolNode*> frontier;
        for (auto& m : mol_nodes_)
            if (m.state == MolState::Frontier) frontier.push_back(&m);
        if (frontier.empty()) return nullptr;
        switch (policy) {
            case SelectPolicy::Random:
                return frontier[rng->below(frontier.size())];
            case SelectPolicy::Bfs: {
                MolNode* best = frontier.front();
                for (MolNode* m : frontier)
                    if (bfs_key_less(m, best)) best = m;
                return best;
            }
            case SelectPolicy::ByVt:
            case SelectPolicy::ByVtPlusDt: {
                const bool with_dt = policy == SelectPolicy::ByVtPlusDt;
                MolNode* best = nullptr;
                double best_key = kInf;
                for (MolNode* m : frontier) {
                    double key = m->vt;
                    if (with_dt) key += m->dt.empty() ? kInf : m->dt.min();
                    if (!best || key < best_key ||
                        (key == best_key && tie_less(m, best))) {
                        best = m;
                        best_key = key;
                    }
                }
                return best;
            }
        }
        return nullptr;
    }

    // Expands a frontier node with the retro model; returns newly created
    // molecule nodes (for meeting checks). The node leaves the frontier even
    // when no proposal survives.
    std::vector<MolNode*> expand(MolNode* m, const ModelSuite& models,
                                 int templates_per_expansion) {
        if (m->state != MolState::Frontier)
            throw ContractViolation("expand: node is not on the frontier");
        auto proposals = models.retro_model(m->id, templates_per_expansion);

        std::unordered_set<std::string> ancestors;
        collect_ancestors(m, ancestors);

        std::vector<MolNode*> created;
        for (const auto& [rxn, plaus] : proposals) {
            bool cyclic = false;
            for (const auto& r : rxn->reactants)
                if (ancestors.count(r)) { cyclic = true; break; }
            if (cyclic) continue;

            rxn_nodes_.push_back({});
            RxnNode* node = &rxn_nodes_.back();
            node->rxn = rxn;
            node->cost = rxn->cost(cost_mode_);
            node->parent = m;
            m->children.push_back(node);
            for (const auto& r : rxn->reactants) {
                MolNode* child = find(r);
                if (!child) {
                    child = make_molecule(r, m->depth + 1);
                    created.push_back(child);
                }
                child->parents.push_back(node);
                node->children.push_back(child);
            }
        }
        m->state = m->children.empty() ? MolState::Dead : MolState::Expanded;
        return created;
    }

    // Removes a depth-capped frontier node from play without expanding it.
    void kill(MolNode* m) {
        if (m->state != MolState::Frontier)
            throw ContractViolation("kill: node is not on the frontier");
        m->state = MolState::Dead;
    }

    // Marks a top node as met by the bottom search: rn pinned (0, or the
    // bottom path cost under met_true_cost), dn pinned {0}, and the node
    // leaves the frontier. Idempotent; the first meeting's handle is kept.
    void mark_met(MolNode* m, std::vector<RouteStep> bottom_path,
                  double bottom_path_cost) {
        if (m->met) return;
        m->met = true;
        m->met_path = std::move(bottom_path);
        m->met_path_cost = bottom_path_cost;
        if (m->state == MolState::Frontier) m->state = MolState::Expanded;
    }

    // Full propagation pass: reaction numbers and proved flags upward, total
    // values downward, plus distance numbers when tracked. Single passes in
    // topological order reach the fixed point on a DAG.
    void update() {
        auto order = topological_nodes();
        // Upward: rn, proved, dn.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (it->second) {  // reaction node
                RxnNode* r = it->first.rxn;
                double sum = r->cost;
                bool all_proved = true;
                for (MolNode* c : r->children) {
                    sum += c->rn;
                    all_proved = all_proved && c->proved;
                }
                r->rn = sum;
                r->proved = all_proved;
                if (track_dn_) {
                    DnMultiset dn;
                    for (MolNode* c : r->children) dn = dn.united(c->dn);
                    r->dn = std::move(dn);
                }
            } else {
                MolNode* m = it->first.mol;
                m->best_child = nullptr;
                for (RxnNode* r : m->children)
                    if (!m->best_child || r->rn < m->best_child->rn ||
                        (r->rn == m->best_child->rn &&
                         r->rxn->id < m->best_child->rxn->id))
                        m->best_child = r;
                if (m->met) {
                    m->rn = met_true_cost_ ? m->met_path_cost : 0.0;
                } else if (m->buyable && m->state != MolState::Frontier) {
                    m->rn = 0.0;
                } else if (m->state == MolState::Frontier) {
                    m->rn = m->buyable ? 0.0 : m->heuristic_rn;
                } else if (m->state == MolState::Dead) {
                    m->rn = kInf;
                } else {
                    m->rn = m->best_child ? m->best_child->rn : kInf;
                }
                m->proved = m->buyable;
                for (RxnNode* r : m->children)
                    if (r->proved) { m->proved = true; break; }
                if (track_dn_) {
                    if (m->met) {
                        m->dn = DnMultiset::single(0.0);
                    } else if (m->children.empty()) {
                        m->dn = DnMultiset::single(
                            m->rn == kInf ? kInf : m->d_m - m->rn);
                    } else {
                        m->dn = m->best_child->dn;
                    }
                }
            }
        }
        // Downward: vt, dt.
        for (const auto& entry : order) {
            if (entry.second) {
                RxnNode* r = entry.first.rxn;
                MolNode* p = r->parent;
                r->vt = (r->rn == kInf || p->rn == kInf || p->vt == kInf)
                            ? kInf
                            : r->rn - p->rn + p->vt;
                if (track_dn_) {
                    // Routes through children of a met node would have to
                    // decompose it, which meeting rules out; freeze dt below.
                    if (p->met || p->dt_frozen) {
                        r->dt = DnMultiset::single(kInf);
                        r->dt_frozen = true;
                    } else {
                        r->dt = p->dt.subtracted(p->best_child->dn).united(r->dn);
                        r->dt_frozen = false;
                    }
                }
            } else {
                MolNode* m = entry.first.mol;
                if (m == root_) {
                    m->vt = m->rn;
                    if (track_dn_) {
                        m->dt = m->dn;
                        m->dt_frozen = false;
                    }
                    continue;
                }
                RxnNode* best = nullptr;
                for (RxnNode* r : m->parents) {
                    if (!best || r->vt < best->vt) best = r;
                }
                m->vt = best ? best->vt : kInf;
                if (track_dn_) {
                    RxnNode* best_rn = nullptr;
                    for (RxnNode* r : m->parents)
                        if (!best_rn || r->rn < best_rn->rn ||
                            (r->rn == best_rn->rn && r->rxn->id < best_rn->rxn->id))
                            best_rn = r;
                    m->dt = best_rn ? best_rn->dt : DnMultiset::single(kInf);
                    m->dt_frozen = best_rn ? best_rn->dt_frozen : true;
                }
            }
        }
    }

    // True when the graph contains a valid route for the target whose leaves
    // are buyable molecules, met nodes, or the starting material itself, with
    // at least one met/s.m. leaf when a starting material is given. The root
    // must be decomposed (Constraint 2) unless it was itself met.
    bool solved(const std::optional<std::string>& sm) const {
        if (!sm) return root_->proved;
        if (root_->met) return true;
        auto tables = extraction_tables(*sm);
        return root_best_source_rxn(tables) != nullptr;
    }

    // Extracts the minimum-cost route under the current proved/met structure.
    // With a starting material, the route is forced to use at least one
    // met/s.m. leaf; met leaves are spliced with their bottom paths.
    Route extract_route(const std::optional<std::string>& sm) const {
        Route route;
        if (sm && root_->met) {
            for (const auto& step : root_->met_path) route.steps.push_back(step);
            return route;
        }
        EmitState st{route, {}, {}};
        if (!sm) {
            if (root_->buyable) return route;  // target purchasable: empty route
            ExtractTables t = extraction_tables("");
            if (t.f.at(root_) == kInf)
                throw ContractViolation("extract_route: target not proved");
            emit_molecule(root_, false, "", t, st);
            return route;
        }
        ExtractTables t = extraction_tables(*sm);
        const RxnNode* top = root_best_source_rxn(t);
        if (!top) throw ContractViolation("extract_route: no constrained route");
        st.mols.insert(root_);
        emit_reaction(top, true, *sm, t, st);
        normalize(route);
        return route;
    }

    // Cost of the extracted constrained route as estimated by the DP (met
    // leaves at their pinned credit).
    double constrained_cost_estimate(const std::string& sm) const {
        if (root_->met) return met_true_cost_ ? root_->met_path_cost : 0.0;
        auto t = extraction_tables(sm);
        const RxnNode* top = root_best_source_rxn(t);
        return top ? t.g_rxn.at(top) : kInf;
    }

private:
    union NodeRef {
        MolNode* mol;
        RxnNode* rxn;
    };

    struct ExtractTables {
        // f: min cost with leaves in {buyable, met, sm}; g: same but using
        // at least one met/sm leaf. Per reaction: aggregated child values.
        std::unordered_map<const MolNode*, double> f, g;
        std::unordered_map<const RxnNode*, double> f_rxn, g_rxn;
        std::unordered_map<const RxnNode*, const MolNode*> g_pick;
    };

    MolNode* make_molecule(const std::string& id, int depth) {
        const Molecule& mol = net_.molecule(id);
        mol_nodes_.push_back({});
        MolNode* node = &mol_nodes_.back();
        node->id = id;
        node->buyable = mol.buyable;
        node->depth = depth;
        node->state = mol.buyable ? MolState::Buyable : MolState::Frontier;
        node->heuristic_rn = mol.buyable ? 0.0 : heuristic_(id);
        node->d_m = dm_of_ ? dm_of_(id) : 0.0;
        by_id_.emplace(id, node);
        return node;
    }

    void collect_ancestors(MolNode* m, std::unordered_set<std::string>& out) const {
        std::vector<MolNode*> stack{m};
        while (!stack.empty()) {
            MolNode* cur = stack.back();
            stack.pop_back();
            if (!out.insert(cur->id).second) continue;
            for (RxnNode* r : cur->parents) stack.push_back(r->parent);
        }
    }

    static bool tie_less(const MolNode* a, const MolNode* b) {
        if (a->depth != b->depth) return a->depth < b->depth;
        return a->id < b->id;
    }

    static bool bfs_key_less(const MolNode* a, const MolNode* b) {
        if (a->depth != b->depth) return a->depth < b->depth;
        double pa = max_parent_plausibility(a);
        double pb = max_parent_plausibility(b);
        if (pa != pb) return pa > pb;
        return a->id < b->id;
    }

    static double max_parent_plausibility(const MolNode* m) {
        double best = 1.0;  // root has no parents
        bool any = false;
        for (const RxnNode* r : m->parents) {
            best = any ? std::max(best, r->rxn->plausibility) : r->rxn->plausibility;
            any = true;
        }
        return best;
    }

    // (node, is_reaction) pairs root-first; every parent precedes its children.
    std::vector<std::pair<NodeRef, bool>> topological_nodes() {
        std::vector<std::pair<NodeRef, bool>> order;
        order.reserve(mol_nodes_.size() + rxn_nodes_.size());
        std::unordered_map<const MolNode*, std::size_t> pending;
        for (auto& m : mol_nodes_) pending[&m] = m.parents.size();
        std::vector<MolNode*> queue;
        for (auto& m : mol_nodes_)
            if (m.parents.empty()) queue.push_back(&m);
        std::size_t head = 0;
        while (head < queue.size()) {
            MolNode* m = queue[head++];
            NodeRef ref;
            ref.mol = m;
            order.push_back({ref, false});
            for (RxnNode* r : m->children) {
                NodeRef rr;
                rr.rxn = r;
                order.push_back({rr, true});
                for (MolNode* c : r->children)
                    if (--pending[c] == 0) queue.push_back(c);
            }
        }
        if (order.size() != mol_nodes_.size() + rxn_nodes_.size())
            throw ContractViolation("search graph contains a cycle");
        return order;
    }

    // Bottom-up extraction DP. sm may be empty (plain extraction only).
    ExtractTables extraction_tables(const std::string& sm) const {
        ExtractTables t;
        auto order = const_cast<SearchGraph*>(this)->topological_nodes();
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (it->second) {
                const RxnNode* r = it->first.rxn;
                double fsum = r->cost;
                for (const MolNode* c : r->children) {
                    double fc = t.f.at(c);
                    fsum = (fc == kInf) ? kInf : fsum + fc;
                    if (fsum == kInf) break;
                }
                t.f_rxn[r] = fsum;
                double best_g = kInf;
                const MolNode* pick = nullptr;
                if (fsum != kInf) {
                    for (const MolNode* c : r->children) {
                        double gc = t.g.at(c);
                        if (gc == kInf) continue;
                        double cand = fsum - t.f.at(c) + gc;
                        if (cand < best_g ||
                            (cand == best_g && pick && c->id < pick->id)) {
                            best_g = cand;
                            pick = c;
                        }
                    }
                }
                t.g_rxn[r] = best_g;
                t.g_pick[r] = pick;
            } else {
                const MolNode* m = it->first.mol;
                double f = kInf, g = kInf;
                if (m->met) {
                    f = g = met_true_cost_ ? m->met_path_cost : 0.0;
                } else if (!sm.empty() && m->id == sm) {
                    f = g = 0.0;  // s.m. is always usable as a leaf (C4)
                } else if (m->buyable) {
                    f = 0.0;
                } else {
                    for (const RxnNode* r : m->children)
                        f = std::min(f, t.f_rxn.count(r) ? t.f_rxn.at(r) : kInf);
                    for (const RxnNode* r : m->children)
                        g = std::min(g, t.g_rxn.count(r) ? t.g_rxn.at(r) : kInf);
                    t.f[m] = f;
                    t.g[m] = g;
                    continue;
                }
                // Leaf shortcuts above may still be beaten by decomposition
                // for f (never for cost >= 0 edges, so keep the leaf value).
                t.f[m] = f;
                t.g[m] = g;
            }
        }
        return t;
    }

    // Best source-using child reaction of the root (the target must be
    // decomposed unless met), or nullptr when no constrained route exists.
    const RxnNode* root_best_source_rxn(const ExtractTables& t) const {
        const RxnNode* best = nullptr;
        double best_cost = kInf;
        for (const RxnNode* r : root_->children) {
            double g = t.g_rxn.count(r) ? t.g_rxn.at(r) : kInf;
            if (g == kInf) continue;
            if (!best || g < best_cost ||
                (g == best_cost && r->rxn->id < best->rxn->id)) {
                best = r;
                best_cost = g;
            }
        }
        return best;
    }

    struct EmitState {
        Route& route;
        std::unordered_set<std::string> rxn_ids;
        std::unordered_set<const MolNode*> mols;  // already supplied
    };

    void splice_met(const MolNode* m, EmitState& st) const {
        for (const auto& step : m->met_path) {
            if (st.rxn_ids.insert(step.reaction.id).second)
                st.route.steps.push_back(step);
        }
    }

    void emit_molecule(const MolNode* m, bool need_source, const std::string& sm,
                       const ExtractTables& t, EmitState& st) const;

    void emit_reaction(const RxnNode* r, bool need_source, const std::string& sm,
                       const ExtractTables& t, EmitState& st) const {
        if (!st.rxn_ids.insert(r->rxn->id).second) return;
        st.route.steps.push_back({*r->rxn, Provenance::Top});
        const MolNode* pick = need_source ? t.g_pick.at(r) : nullptr;
        // Source branch first so shared molecules resolve toward the s.m.
        if (pick) emit_molecule(pick, true, sm, t, st);
        for (const MolNode* c : r->children)
            if (c != pick) emit_molecule(c, false, sm, t, st);
    }

    // Drops duplicate producers (bottom splice wins over a top decomposition
    // of the same molecule) and garbage-collects reactions no longer needed.
    void normalize(Route& route) const {
        std::unordered_map<std::string, std::size_t> producer;
        std::vector<bool> dropped(route.steps.size(), false);
        for (std::size_t i = 0; i < route.steps.size(); ++i) {
            const std::string& product = route.steps[i].reaction.product;
            auto [it, fresh] = producer.emplace(product, i);
            if (fresh) continue;
            std::size_t keep = it->second, drop = i;
            if (route.steps[keep].provenance == Provenance::Top &&
                route.steps[drop].provenance == Provenance::Bottom)
                std::swap(keep, drop);
            dropped[drop] = true;
            it->second = keep;
        }
        // Keep only reactions reachable from the root's product closure.
        std::unordered_set<std::string> needed{root_->id};
        std::vector<std::string> stack{root_->id};
        std::vector<bool> kept(route.steps.size(), false);
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            auto it = producer.find(cur);
            if (it == producer.end() || dropped[it->second] || kept[it->second])
                continue;
            kept[it->second] = true;
            for (const auto& reactant : route.steps[it->second].reaction.reactants)
                if (needed.insert(reactant).second) stack.push_back(reactant);
        }
        Route out;
        for (std::size_t i = 0; i < route.steps.size(); ++i)
            if (kept[i]) out.steps.push_back(route.steps[i]);
        route = std::move(out);
    }

    const ReactionNetwork& net_;
    CostMode cost_mode_;
    std::function<double(const std::string&)> heuristic_;
    std::function<double(const std::string&)> dm_of_;
    bool track_dn_ = false;
    bool met_true_cost_ = false;

    std::deque<MolNode> mol_nodes_;
    std::deque<RxnNode> rxn_nodes_;
    std::unordered_map<std::string, MolNode*> by_id_;
    MolNode* root_ = nullptr;
};

inline void SearchGraph::emit_molecule(const MolNode* m, bool need_source,
                                       const std::string& sm,
                                       const ExtractTables& t, EmitState& st) const {
    if (m->met) {
        st.mols.insert(m);
        splice_met(m, st);
        return;
    }
    if (m->id == sm) return;  // s.m. stays a leaf (C3)
    if (!need_source && m->buyable) return;
    if (!st.mols.insert(m).second) return;  // already supplied upstream
    const RxnNode* best = nullptr;
    double best_cost = kInf;
    for (const RxnNode* r : m->children) {
        const auto& table = need_source ? t.g_rxn : t.f_rxn;
        double c = table.count(r) ? table.at(r) : kInf;
        if (c == kInf) continue;
        if (!best || c < best_cost || (c == best_cost && r->rxn->id < best->rxn->id)) {
            best = r;
            best_cost = c;
        }
    }
    if (!best)
        throw ContractViolation("extract: no usable child reaction for " + m->id);
    emit_reaction(best, need_source, sm, t, st);
}

// Search heuristic bound to a model suite.
inline std::function<double(const std::string&)> make_heuristic(
    const ModelSuite& models, HeuristicSource source, CostMode mode) {
    switch (source) {
        case HeuristicSource::Zero:
            return [](const std::string&) { return 0.0; };
        case HeuristicSource::ExactTable:
            return [&models, mode](const std::string& id) {
                return models.predict_vm(id, mode, false);
            };
        case HeuristicSource::NoisyPredictor:
            return [&models, mode](const std::string& id) {
                return models.predict_vm(id, mode, true);
            };
    }
    throw ContractViolation("unreachable");
}

// Single-ended best-first search. With a starting material the run continues
// past unconstrained solutions and stops at the first constrained one.
inline PlanResult run_retrostar(const ReactionNetwork& net, const ModelSuite& models,
                                const std::string& p_star,
                                const std::optional<std::string>& sm,
                                const SearchBudget& budget, CostMode mode,
                                HeuristicSource heuristic = HeuristicSource::ExactTable,
                                SelectPolicy policy = SelectPolicy::ByVt,
                                std::uint64_t seed = 0,
                                std::vector<TraceEvent>* trace = nullptr) {
    net.molecule(p_star);
    if (sm) net.molecule(*sm);
    PlanResult result;
    result.algo = policy == SelectPolicy::Random ? "random"
                  : policy == SelectPolicy::Bfs  ? "bfs"
                                                 : "retrostar";
    result.seed = seed;
    Rng rng(seed);

    SearchGraph graph(net, p_star, mode, make_heuristic(models, heuristic, mode));
    int expansions = 0;
    auto solved_now = [&]() { return graph.solved(sm); };
    bool done = solved_now();
    while (!done && expansions < budget.max_expansions) {
        MolNode* m = graph.select(policy, &rng);
        if (!m) break;  // frontier exhausted
        if (m->depth >= budget.max_depth) {
            graph.kill(m);
            graph.update();
            continue;
        }
        if (trace)
            trace->push_back({expansions + 1, 'T', m->id, result.algo});
        graph.expand(m, models, budget.templates_per_expansion);
        graph.update();
        ++expansions;
        done = solved_now();
    }
    result.expansions_used = expansions;
    result.solved = done;
    if (done) {
        result.iterations_to_solve = expansions;
        Route route = graph.extract_route(sm);
        result.route_cost = route_cost(route, mode);
        result.route_reactions = static_cast<int>(route.size());
        result.route_depth = route.empty() ? 0 : route_depth(route);
        auto [top, bottom] = count_provenance(route);
        result.forward_reactions = bottom;
        result.route = std::move(route);
    }
    return result;
}

} // namespace bidesp
