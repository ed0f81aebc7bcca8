#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bidesp/core.hpp"
#include "bidesp/distance.hpp"
#include "bidesp/knn.hpp"
#include "bidesp/network.hpp"

namespace bidesp {

struct ModelConfig {
    double hide_prob = 0.0;   // P(a true reaction is invisible to the retro model)
    double noise_sigma = 0.0; // sd of additive noise on predicted distances
    int d_max = 9;            // clipping bound; beyond-cap pairs report d_max+1
    std::uint64_t seed = 0;

    void validate() const {
        if (hide_prob < 0 || hide_prob >= 1)
            throw InputError("ModelConfig: hide_prob must be in [0,1)");
        if (noise_sigma < 0) throw InputError("ModelConfig: noise_sigma must be >= 0");
        if (d_max < 1) throw InputError("ModelConfig: d_max must be >= 1");
    }
};

enum class ForwardRank { ByDistance, ByPlausibility };
enum class PartnerRank { ByDistance, BySimilarity };

// Simulated one-step models: truncated/noisy views of the true network plus
// an exact-table distance predictor. Stateless given (network, config); the
// distance row cache is guarded for concurrent callers.
class ModelSuite {
public:
    ModelSuite(const ReactionNetwork& net, ModelConfig cfg) : net_(net), cfg_(cfg) {
        cfg_.validate();
    }

    const ReactionNetwork& network() const { return net_; }
    const ModelConfig& config() const { return cfg_; }
    const CostTable& vm_unit() const { return vm_table(CostMode::Unit); }

    // Visibility is a stable pseudorandom function of (seed, reaction id).
    bool visible(const Reaction& r) const {
        if (cfg_.hide_prob <= 0) return true;
        return keyed_unit(cfg_.seed, r.id) >= cfg_.hide_prob;
    }

    // Top-n visible producers of m, ranked by descending plausibility.
    std::vector<std::pair<const Reaction*, double>> retro_model(
        const std::string& m, int n) const {
        if (n < 1) throw InputError("retro_model: n must be >= 1");
        std::vector<std::pair<const Reaction*, double>> out;
        for (const Reaction* r : net_.producers_of(m)) {
            if (!visible(*r)) continue;
            out.push_back({r, r->plausibility});
            if (static_cast<int>(out.size()) == n) break;
        }
        return out;
    }

    // Exact unit-cost synthetic distance with Eq.-9-style clipping and a
    // deterministic per-pair noise channel: d > d_max (incl. inf) maps to
    // exactly d_max+1; otherwise clamp(d + noise, 0, d_max).
    double predict_distance(const std::string& m1, const std::string& m2) const {
        double d = exact_distance(m1, m2);
        if (d > cfg_.d_max) return static_cast<double>(cfg_.d_max + 1);
        if (cfg_.noise_sigma <= 0) return d;
        double noise = keyed_normal(cfg_.seed, m1 + "|" + m2, cfg_.noise_sigma);
        return std::clamp(d + noise, 0.0, static_cast<double>(cfg_.d_max));
    }

    double exact_distance(const std::string& m1, const std::string& m2) const {
        net_.molecule(m2);
        const auto& row = through_row(m1);
        double base = vm_unit().at(m1);
        if (base == kInf) return kInf;
        auto it = row.find(m2);
        double t = it == row.end() ? kInf : it->second;
        return t == kInf ? kInf : t - base;
    }

    // V_m estimate used as the search heuristic; noisy variant adds the
    // ModelConfig noise channel, clamped nonnegative.
    double predict_vm(const std::string& m, CostMode mode, bool noisy) const {
        double v = vm_table(mode).at(m);
        if (!noisy || cfg_.noise_sigma <= 0 || v == kInf) return v;
        double noise = keyed_normal(cfg_.seed, "vm|" + m, cfg_.noise_sigma);
        return std::max(0.0, v + noise);
    }

    // Candidate templates come from visible reactions consuming m1; each is
    // scored by max over its candidate products p of
    // plausibility * exp(-ln2 * D(p, m2)), so one unit of predicted distance
    // halves the score. Ties break by template id.
    std::vector<std::string> forward_template_model(
        const std::string& m1, const std::string& m2, int n,
        ForwardRank rank = ForwardRank::ByDistance) const {
        if (n < 1) throw InputError("forward_template_model: n must be >= 1");
        net_.molecule(m2);
        std::unordered_map<std::string, double> score;
        std::vector<std::string> order;
        for (const Reaction* r : net_.consumers_of(m1)) {
            if (!visible(*r)) continue;
            double s = r->plausibility;
            if (rank == ForwardRank::ByDistance) {
                double d = predict_distance(r->product, m2);
                s *= std::exp(-0.6931471805599453 * d);
            }
            auto [it, fresh] = score.emplace(r->template_id, s);
            if (fresh)
                order.push_back(r->template_id);
            else
                it->second = std::max(it->second, s);
        }
        std::sort(order.begin(), order.end(),
                  [&](const std::string& a, const std::string& b) {
                      if (score[a] != score[b]) return score[a] > score[b];
                      return a < b;
                  });
        if (static_cast<int>(order.size()) > n) order.resize(n);
        return order;
    }

    // Applies forward template t to {m1} or {m1, b}; when several network
    // reactions match, the highest-plausibility one wins (ties by id).
    std::optional<std::string> apply_forward_template(
        const std::string& t, const std::string& m1,
        const std::optional<std::string>& b = std::nullopt) const {
        const TemplateDef& tpl = net_.template_def(t);
        if ((tpl.arity == 1) != !b.has_value())
            throw ContractViolation("apply_forward_template: arity mismatch");
        const Reaction* found = find_realized(t, m1, b);
        if (!found) return std::nullopt;
        return found->product;
    }

    const Reaction* find_realized(const std::string& t, const std::string& m1,
                                  const std::optional<std::string>& b) const {
        std::vector<std::string> want;
        want.push_back(m1);
        if (b) want.push_back(*b);
        std::sort(want.begin(), want.end());
        const Reaction* found = nullptr;
        for (const Reaction* r : net_.consumers_of(m1)) {
            if (r->template_id != t || r->reactants != want) continue;
            if (!found || r->plausibility > found->plausibility ||
                (r->plausibility == found->plausibility && r->id < found->id))
                found = r;
        }
        return found;
    }

    // Partner selection per the over-retrieve-then-filter scheme: query the
    // index with fp(m1) ^ fp(m2) ^ fp(t) for 4k buyables, keep the ones with
    // an actual network reaction (m1, b) -> p under t, rank by ascending
    // predicted distance of p to m2 (or by similarity for the uninformed
    // variant), and fall back to an exhaustive scan of compatible partners
    // when the intersection is empty.
    std::vector<std::string> building_block_model(
        const std::string& m1, const std::string& m2, const std::string& t, int k,
        const VectorIndex& index, PartnerRank rank = PartnerRank::ByDistance) const {
        if (k < 1) throw InputError("building_block_model: k must be >= 1");
        const TemplateDef& tpl = net_.template_def(t);
        if (tpl.arity != 2)
            throw ContractViolation("building_block_model: template not bimolecular");
        const Molecule& a = net_.molecule(m1);
        const Molecule& g = net_.molecule(m2);

        std::unordered_map<std::string, const Reaction*> compatible;
        for (const Reaction* r : net_.consumers_of(m1)) {
            if (r->template_id != t || r->reactants.size() != 2) continue;
            const std::string& other =
                r->reactants[0] == m1 ? r->reactants[1] : r->reactants[0];
            if (!net_.molecule(other).buyable) continue;
            auto [it, fresh] = compatible.emplace(other, r);
            if (!fresh && (r->plausibility > it->second->plausibility ||
                           (r->plausibility == it->second->plausibility &&
                            r->id < it->second->id)))
                it->second = r;
        }
        if (compatible.empty()) return {};

        BitVec q = a.fingerprint ^ g.fingerprint ^ tpl.fingerprint;
        auto retrieved = index.query(q, static_cast<std::size_t>(4) * k);
        std::vector<std::string> survivors;
        for (const auto& [id, sim] : retrieved)
            if (compatible.count(id)) survivors.push_back(id);

        if (survivors.empty()) {
            // Exhaustive scan: k nearest compatible partners by similarity.
            std::vector<std::pair<std::string, double>> scored;
            for (const auto& [id, r] : compatible)
                scored.push_back({id, cosine(q, net_.molecule(id).fingerprint)});
            std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
                if (x.second != y.second) return x.second > y.second;
                return x.first < y.first;
            });
            std::vector<std::string> out;
            for (const auto& [id, s] : scored) {
                out.push_back(id);
                if (static_cast<int>(out.size()) == k) break;
            }
            return out;
        }

        if (rank == PartnerRank::ByDistance) {
            std::vector<std::pair<std::string, double>> scored;
            for (const auto& id : survivors)
                scored.push_back({id, predict_distance(compatible[id]->product, m2)});
            std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
                if (x.second != y.second) return x.second < y.second;
                return x.first < y.first;
            });
            std::vector<std::string> out;
            for (const auto& [id, d] : scored) {
                out.push_back(id);
                if (static_cast<int>(out.size()) == k) break;
            }
            return out;
        }
        if (static_cast<int>(survivors.size()) > k) survivors.resize(k);
        return survivors;
    }

private:
    const std::unordered_map<std::string, double>& through_row(
        const std::string& m1) const {
        net_.molecule(m1);
        const CostTable& vm = vm_table(CostMode::Unit);
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = row_cache_.find(m1);
        if (it != row_cache_.end()) return it->second;
        auto row = vm.at(m1) == kInf
                       ? std::unordered_map<std::string, double>{}
                       : compute_through_costs(net_, m1, CostMode::Unit, vm);
        return row_cache_.emplace(m1, std::move(row)).first->second;
    }

    const CostTable& vm_table(CostMode mode) const {
        std::lock_guard<std::mutex> lock(vm_mutex_);
        auto& slot = mode == CostMode::Unit ? vm_unit_ : vm_neglog_;
        if (!slot) slot = compute_vm(net_, mode);
        return *slot;
    }

    const ReactionNetwork& net_;
    ModelConfig cfg_;
    mutable std::optional<CostTable> vm_unit_;
    mutable std::optional<CostTable> vm_neglog_;
    mutable std::unordered_map<std::string, std::unordered_map<std::string, double>>
        row_cache_;
    mutable std::mutex cache_mutex_;
    mutable std::mutex vm_mutex_;
};

} // namespace bidesp
