#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bidesp/core.hpp"
#include "bidesp/knn.hpp"
#include "bidesp/models.hpp"
#include "bidesp/retrostar.hpp"

namespace bidesp {

enum class DespStrategy { F2E, F2F, RetroStarPlusD, BiBfs };

inline std::string algo_name(DespStrategy s) {
    switch (s) {
        case DespStrategy::F2E: return "desp_f2e";
        case DespStrategy::F2F: return "desp_f2f";
        case DespStrategy::RetroStarPlusD: return "retrostar_d";
        case DespStrategy::BiBfs: return "bibfs";
    }
    return "?";
}

struct DespConfig {
    DespStrategy strategy = DespStrategy::F2E;
    int lambda = 2;        // top cycles per bottom cycle
    int n1 = 50;           // retro templates per expansion
    int n2 = 25;           // forward templates per expansion
    int k_bb = 2;          // building blocks per bimolecular template
    int top_depth = 11;
    int bottom_depth = 6;
    int max_expansions = 500;
    bool met_true_cost = false;  // credit met leaves with their bottom path cost
    CostMode cost_mode = CostMode::NegLogPlausibility;
    HeuristicSource heuristic = HeuristicSource::ExactTable;

    void validate() const {
        if (lambda < 1) throw InputError("DespConfig: lambda must be >= 1");
        if (n1 < 1 || n2 < 1 || k_bb < 1)
            throw InputError("DespConfig: expansion widths must be positive");
        if (top_depth < 1 || bottom_depth < 1 || max_expansions < 1)
            throw InputError("DespConfig: limits must be positive");
    }
};

// Forward synthesis tree rooted at the starting material. Single-parent by
// construction: forward expansions never branch from multiple product nodes.
struct BottomNode {
    std::string id;
    BottomNode* parent = nullptr;
    const Reaction* via = nullptr;          // realized network reaction
    std::optional<std::string> partner;     // buyable partner when bimolecular
    double path_cost = 0.0;
    int depth = 0;
    bool frontier = true;
    double rn = 0.0;  // predicted distance to the node's goal
    double vt = 0.0;  // path_cost + rn
    std::string goal; // cached gamma(m)
};

class BottomGraph {
public:
    BottomGraph(std::string root_id, std::string goal, double rn) {
        nodes_.push_back({});
        BottomNode& r = nodes_.back();
        r.id = std::move(root_id);
        r.goal = std::move(goal);
        r.rn = rn;
        r.vt = rn;
        by_id_.emplace(r.id, &r);
    }

    BottomNode* root() { return &nodes_.front(); }
    const BottomNode* root() const { return &nodes_.front(); }
    const std::deque<BottomNode>& nodes() const { return nodes_; }

    BottomNode* find(const std::string& id) {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : it->second;
    }

    bool has_frontier() const {
        for (const auto& n : nodes_)
            if (n.frontier) return true;
        return false;
    }

    // argmin vt (ties by depth then id), or BFS order (depth asc, realized
    // plausibility desc, id asc) for the uninformed variant.
    BottomNode* select(bool bfs) {
        BottomNode* best = nullptr;
        for (auto& n : nodes_) {
            if (!n.frontier) continue;
            if (!best) { best = &n; continue; }
            if (bfs) {
                double pn = n.via ? n.via->plausibility : 1.0;
                double pb = best->via ? best->via->plausibility : 1.0;
                if (n.depth != best->depth ? n.depth < best->depth
                    : pn != pb             ? pn > pb
                                           : n.id < best->id)
                    best = &n;
            } else {
                if (n.vt != best->vt   ? n.vt < best->vt
                    : n.depth != best->depth ? n.depth < best->depth
                                             : n.id < best->id)
                    best = &n;
            }
        }
        return best;
    }

    BottomNode* add_child(BottomNode* parent, const std::string& id,
                          const Reaction* via, std::optional<std::string> partner,
                          double edge_cost, double rn, std::string goal) {
        nodes_.push_back({});
        BottomNode& n = nodes_.back();
        n.id = id;
        n.parent = parent;
        n.via = via;
        n.partner = std::move(partner);
        n.path_cost = parent->path_cost + edge_cost;
        n.depth = parent->depth + 1;
        n.rn = rn;
        n.vt = n.path_cost + n.rn;
        n.goal = std::move(goal);
        by_id_.emplace(n.id, &n);
        return &n;
    }

    void refresh_vt() {
        for (auto& n : nodes_) n.vt = n.path_cost + n.rn;
    }

    // Realized reactions from the root down to `node`, tagged bottom.
    std::vector<RouteStep> path_to(const BottomNode* node) const {
        std::vector<RouteStep> steps;
        for (const BottomNode* cur = node; cur->parent; cur = cur->parent)
            steps.push_back({*cur->via, Provenance::Bottom});
        std::reverse(steps.begin(), steps.end());
        return steps;
    }

private:
    std::deque<BottomNode> nodes_;
    std::unordered_map<std::string, BottomNode*> by_id_;
};

// Double-ended search: a distance-guided Retro* top graph interleaved with
// forward expansions from the starting material, meeting logic, and route
// stitching. RetroStarPlusD runs the guided top side alone; BiBfs swaps both
// selection policies for breadth-first keys and drops distance ranking.
class DespRun {
public:
    DespRun(const ReactionNetwork& net, const ModelSuite& models,
            const VectorIndex& bb_index, std::string p_star, std::string r_star,
            DespConfig cfg)
        : net_(net),
          models_(models),
          bb_index_(bb_index),
          p_star_(std::move(p_star)),
          r_star_(std::move(r_star)),
          cfg_(cfg) {
        cfg_.validate();
        if (p_star_ == r_star_)
            throw InputError("desp: target and starting material coincide");
        net_.molecule(p_star_);
        net_.molecule(r_star_);

        const bool guided = cfg_.strategy != DespStrategy::BiBfs;
        auto dm_of = [this](const std::string& id) {
            return models_.predict_distance(top_goal_of(id), id);
        };
        top_ = std::make_unique<SearchGraph>(
            net_, p_star_, cfg_.cost_mode,
            make_heuristic(models_, cfg_.heuristic, cfg_.cost_mode),
            guided ? std::function<double(const std::string&)>(dm_of)
                   : std::function<double(const std::string&)>{},
            guided, cfg_.met_true_cost);

        if (cfg_.strategy != DespStrategy::RetroStarPlusD) {
            std::string goal = bottom_goal_of(r_star_);
            bottom_ = std::make_unique<BottomGraph>(
                r_star_, goal, models_.predict_distance(r_star_, goal));
        }
    }

    using CycleHook = std::function<void(const SearchGraph&, int)>;

    PlanResult run(std::vector<TraceEvent>* trace = nullptr,
                   const CycleHook& on_cycle = {}) {
        PlanResult result;
        result.algo = algo_name(cfg_.strategy);
        int l = 0;
        bool top_dead = false;
        bool bottom_dead = bottom_ == nullptr;
        const SelectPolicy top_policy = cfg_.strategy == DespStrategy::BiBfs
                                            ? SelectPolicy::Bfs
                                            : SelectPolicy::ByVtPlusDt;
        while (l < cfg_.max_expansions && !(top_dead && bottom_dead)) {
            for (int i = 0; !top_dead && i < cfg_.lambda && l < cfg_.max_expansions;
                 ++i) {
                if (!top_cycle(top_policy, l, trace)) { top_dead = true; break; }
                if (on_cycle) on_cycle(*top_, l);
                if (finish_if_solved(result, l)) return result;
            }
            if (bottom_ && !bottom_dead && l < cfg_.max_expansions) {
                if (!bottom_cycle(l, trace)) {
                    bottom_dead = true;
                } else {
                    if (on_cycle) on_cycle(*top_, l);
                    if (finish_if_solved(result, l)) return result;
                }
            }
        }
        result.solved = false;
        result.expansions_used = l;
        return result;
    }

    const SearchGraph& top_graph() const { return *top_; }
    const BottomGraph* bottom_graph() const { return bottom_.get(); }

private:
    // gamma for a top-graph molecule: r* under F2E, the closest bottom node
    // under F2F (comparisons span all nodes of the opposing graph).
    std::string top_goal_of(const std::string& id) const {
        if (cfg_.strategy != DespStrategy::F2F || !bottom_) return r_star_;
        const BottomNode* best = nullptr;
        double best_d = kInf;
        for (const auto& n : bottom_->nodes()) {
            double d = models_.predict_distance(n.id, id);
            if (!best || d < best_d || (d == best_d && n.id < best->id)) {
                best = &n;
                best_d = d;
            }
        }
        return best->id;
    }

    // gamma for a bottom-graph molecule: p* under F2E, else the closest node
    // anywhere in the top graph.
    std::string bottom_goal_of(const std::string& id) const {
        if (cfg_.strategy != DespStrategy::F2F || !top_) return p_star_;
        const MolNode* best = nullptr;
        double best_d = kInf;
        for (const auto& m : top_->molecules()) {
            double d = models_.predict_distance(id, m.id);
            if (!best || d < best_d || (d == best_d && m.id < best->id)) {
                best = &m;
                best_d = d;
            }
        }
        return best ? best->id : p_star_;
    }

    // One top select-expand-update cycle; false when the top frontier is
    // exhausted. Depth-capped selections are killed without counting.
    bool top_cycle(SelectPolicy policy, int& l, std::vector<TraceEvent>* trace) {
        for (;;) {
            MolNode* m = top_->select(policy);
            if (!m) return false;
            if (m->depth >= cfg_.top_depth) {
                top_->kill(m);
                top_->update();
                continue;
            }
            if (trace)
                trace->push_back({l + 1, 'T', m->id, algo_name(cfg_.strategy)});
            auto created = top_->expand(m, models_, cfg_.n1);
            top_->update();
            if (bottom_) {
                for (MolNode* c : created) {
                    BottomNode* b = bottom_->find(c->id);
                    if (b) {  // met bottom: zero the bottom node's estimate
                        b->rn = 0.0;
                        bottom_->refresh_vt();
                    }
                }
            }
            ++l;
            return true;
        }
    }

    bool bottom_cycle(int& l, std::vector<TraceEvent>* trace) {
        const bool bfs = cfg_.strategy == DespStrategy::BiBfs;
        for (;;) {
            BottomNode* b = bottom_->select(bfs);
            if (!b) return false;
            if (b->depth >= cfg_.bottom_depth) {
                b->frontier = false;
                continue;
            }
            if (trace)
                trace->push_back({l + 1, 'B', b->id, algo_name(cfg_.strategy)});
            expand_bottom(b);
            bottom_->refresh_vt();
            ++l;
            return true;
        }
    }

    void expand_bottom(BottomNode* m) {
        m->frontier = false;
        const ForwardRank fwd_rank = cfg_.strategy == DespStrategy::BiBfs
                                         ? ForwardRank::ByPlausibility
                                         : ForwardRank::ByDistance;
        const PartnerRank bb_rank = cfg_.strategy == DespStrategy::BiBfs
                                        ? PartnerRank::BySimilarity
                                        : PartnerRank::ByDistance;
        auto templates =
            models_.forward_template_model(m->id, m->goal, cfg_.n2, fwd_rank);
        for (const auto& t : templates) {
            const TemplateDef& tpl = net_.template_def(t);
            std::vector<std::optional<std::string>> partners;
            if (tpl.arity == 1) {
                partners.push_back(std::nullopt);
            } else {
                for (auto& b : models_.building_block_model(m->id, m->goal, t,
                                                            cfg_.k_bb, bb_index_,
                                                            bb_rank))
                    partners.push_back(std::move(b));
            }
            for (const auto& partner : partners) {
                auto product = models_.apply_forward_template(t, m->id, partner);
                if (!product) continue;
                if (bottom_->find(*product)) continue;  // first discovery wins
                const Reaction* realized = models_.find_realized(t, m->id, partner);
                std::string goal = bottom_goal_of(*product);
                double rn = models_.predict_distance(*product, goal);
                BottomNode* child = bottom_->add_child(
                    m, *product, realized, partner, realized->cost(cfg_.cost_mode),
                    rn, std::move(goal));
                if (MolNode* top_hit = top_->find(child->id)) {
                    // met top: pin the node and remember the bottom path
                    top_->mark_met(top_hit, bottom_->path_to(child),
                                   child->path_cost);
                    top_->update();
                }
            }
        }
    }

    bool finish_if_solved(PlanResult& result, int l) {
        if (!top_->solved(r_star_)) return false;
        Route route = top_->extract_route(r_star_);
        auto report = validate_route(route, p_star_, net_.buyables(),
                                     std::optional<std::string>(r_star_));
        if (!report.valid) {
            std::string tags;
            for (const auto& v : report.violated) tags += v + " ";
            throw ContractViolation("desp: stitched route fails validation: " + tags);
        }
        result.solved = true;
        result.iterations_to_solve = l;
        result.expansions_used = l;
        result.route_cost = route_cost(route, cfg_.cost_mode);
        result.route_reactions = static_cast<int>(route.size());
        result.route_depth = route_depth(route);
        auto [top, bottom] = count_provenance(route);
        result.forward_reactions = bottom;
        result.route = std::move(route);
        return true;
    }

    const ReactionNetwork& net_;
    const ModelSuite& models_;
    const VectorIndex& bb_index_;
    std::string p_star_;
    std::string r_star_;
    DespConfig cfg_;
    std::unique_ptr<SearchGraph> top_;
    std::unique_ptr<BottomGraph> bottom_;
};

inline PlanResult run_desp(const ReactionNetwork& net, const ModelSuite& models,
                           const VectorIndex& bb_index, const std::string& p_star,
                           const std::string& r_star, const DespConfig& cfg,
                           std::uint64_t seed = 0,
                           std::vector<TraceEvent>* trace = nullptr,
                           const DespRun::CycleHook& on_cycle = {}) {
    DespRun run(net, models, bb_index, p_star, r_star, cfg);
    PlanResult result = run.run(trace, on_cycle);
    result.seed = seed;
    return result;
}

} // namespace bidesp
