#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bidesp/core.hpp"
#include "bidesp/rng.hpp"

namespace bidesp {

struct NetworkGenConfig {
    int layers = 5;
    int molecules_per_layer = 20;
    double bb_extra_fraction = 0.1;   // P(non-layer-0 molecule is also buyable)
    int max_producers_per_molecule = 2;
    double bimolecular_fraction = 0.4;
    double bb_partner_prob = 0.75;    // P(bimolecular partner drawn from buyables), >= 0.5
    double plausibility_min = 0.3;
    double plausibility_max = 1.0;
    int fingerprint_bits = 256;
    std::uint64_t seed = 0;

    void validate() const {
        if (layers < 2) throw GenerationError("config: layers must be >= 2");
        if (molecules_per_layer < 1)
            throw GenerationError("config: molecules_per_layer must be >= 1");
        if (max_producers_per_molecule < 1)
            throw GenerationError("config: max_producers_per_molecule must be >= 1");
        if (bb_extra_fraction < 0 || bb_extra_fraction > 1 ||
            bimolecular_fraction < 0 || bimolecular_fraction > 1)
            throw GenerationError("config: fractions must be in [0,1]");
        if (bb_partner_prob < 0.5 || bb_partner_prob > 1)
            throw GenerationError("config: bb_partner_prob must be in [0.5,1]");
        if (!(plausibility_min > 0) || plausibility_max > 1 ||
            plausibility_min > plausibility_max)
            throw GenerationError("config: plausibility range must be within (0,1]");
        if (fingerprint_bits < 8 || fingerprint_bits % 8 != 0)
            throw GenerationError("config: fingerprint_bits must be a positive multiple of 8");
        if (bimolecular_fraction > 0 && molecules_per_layer < 2)
            throw GenerationError("config: layer 0 smaller than arity demand");
    }
};

// Ground-truth reaction hypergraph. Immutable once built; all lookups are
// index-backed and safe for concurrent readers.
class ReactionNetwork {
public:
    const std::vector<Molecule>& molecules() const { return molecules_; }
    const std::vector<TemplateDef>& templates() const { return templates_; }
    const std::vector<Reaction>& reactions() const { return reactions_; }
    const std::unordered_set<std::string>& buyables() const { return buyables_; }

    int fingerprint_bits() const { return fingerprint_bits_; }
    std::uint64_t seed() const { return gen_config_ ? gen_config_->seed : 0; }
    const std::optional<NetworkGenConfig>& gen_config() const { return gen_config_; }

    bool has_molecule(const std::string& id) const { return mol_index_.count(id); }

    const Molecule& molecule(const std::string& id) const {
        auto it = mol_index_.find(id);
        if (it == mol_index_.end()) throw InputError("unknown molecule id: " + id);
        return molecules_[it->second];
    }

    std::size_t molecule_index(const std::string& id) const {
        auto it = mol_index_.find(id);
        if (it == mol_index_.end()) throw InputError("unknown molecule id: " + id);
        return it->second;
    }

    const TemplateDef& template_def(const std::string& id) const {
        auto it = tpl_index_.find(id);
        if (it == tpl_index_.end()) throw InputError("unknown template id: " + id);
        return templates_[it->second];
    }

    // Producing reactions, ranked by descending plausibility, ties by id.
    const std::vector<const Reaction*>& producers_of(const std::string& id) const {
        molecule_index(id);
        static const std::vector<const Reaction*> empty;
        auto it = by_product_.find(id);
        return it == by_product_.end() ? empty : it->second;
    }

    const std::vector<const Reaction*>& consumers_of(const std::string& id) const {
        molecule_index(id);
        static const std::vector<const Reaction*> empty;
        auto it = by_reactant_.find(id);
        return it == by_reactant_.end() ? empty : it->second;
    }

    // Molecule order with every reactant preceding its products, or nullopt
    // when the network is cyclic.
    std::optional<std::vector<std::string>> topological_molecules() const {
        std::unordered_map<std::string, int> indegree;
        for (const auto& m : molecules_) indegree[m.id] = 0;
        for (const auto& r : reactions_) indegree[r.product] += 1;
        std::vector<std::string> order;
        order.reserve(molecules_.size());
        std::vector<std::string> queue;
        for (const auto& m : molecules_)
            if (indegree[m.id] == 0) queue.push_back(m.id);
        std::unordered_map<std::string, int> remaining;
        for (const auto& r : reactions_) remaining[r.id] = static_cast<int>(r.reactants.size());
        std::size_t head = 0;
        while (head < queue.size()) {
            std::string cur = queue[head++];
            order.push_back(cur);
            for (const Reaction* r : consumers_of(cur)) {
                if (--remaining[r->id] == 0)
                    if (--indegree[r->product] == 0) queue.push_back(r->product);
            }
        }
        if (order.size() != molecules_.size()) return std::nullopt;
        return order;
    }

    static ReactionNetwork generate(const NetworkGenConfig& cfg);
    static ReactionNetwork from_json(const nlohmann::json& j);
    static ReactionNetwork load(const std::string& path);

    nlohmann::json to_json() const;
    void save(const std::string& path) const;

    // Assembles indices from already-filled tables; validates referential
    // integrity. Acyclicity is checked by consumers that require it.
    void finalize() {
        mol_index_.clear();
        tpl_index_.clear();
        by_product_.clear();
        by_reactant_.clear();
        buyables_.clear();
        for (std::size_t i = 0; i < molecules_.size(); ++i) {
            if (!mol_index_.emplace(molecules_[i].id, i).second)
                throw ParseError("duplicate molecule id: " + molecules_[i].id);
            if (molecules_[i].size < 1)
                throw ParseError("molecule size must be >= 1: " + molecules_[i].id);
            if (molecules_[i].buyable) buyables_.insert(molecules_[i].id);
        }
        for (std::size_t i = 0; i < templates_.size(); ++i) {
            if (!tpl_index_.emplace(templates_[i].id, i).second)
                throw ParseError("duplicate template id: " + templates_[i].id);
            if (templates_[i].arity != 1 && templates_[i].arity != 2)
                throw ParseError("template arity must be 1 or 2: " + templates_[i].id);
        }
        std::unordered_set<std::string> rxn_ids;
        for (const auto& r : reactions_) {
            if (!rxn_ids.insert(r.id).second)
                throw ParseError("duplicate reaction id: " + r.id);
            if (r.reactants.empty())
                throw ParseError("reaction with no reactants: " + r.id);
            if (!mol_index_.count(r.product))
                throw ParseError("reaction " + r.id + ": unknown product " + r.product);
            for (const auto& m : r.reactants) {
                if (!mol_index_.count(m))
                    throw ParseError("reaction " + r.id + ": unknown reactant " + m);
                if (m == r.product)
                    throw ParseError("reaction " + r.id + ": product among reactants");
            }
            if (!(r.plausibility > 0) || r.plausibility > 1)
                throw ParseError("reaction " + r.id + ": plausibility outside (0,1]");
            if (!tpl_index_.count(r.template_id))
                throw ParseError("reaction " + r.id + ": unknown template " + r.template_id);
        }
        for (const auto& r : reactions_) {
            by_product_[r.product].push_back(&r);
            for (const auto& m : r.reactants) by_reactant_[m].push_back(&r);
        }
        auto rank = [](const Reaction* a, const Reaction* b) {
            if (a->plausibility != b->plausibility)
                return a->plausibility > b->plausibility;
            return a->id < b->id;
        };
        for (auto& [id, v] : by_product_) std::sort(v.begin(), v.end(), rank);
        for (auto& [id, v] : by_reactant_)
            std::sort(v.begin(), v.end(),
                      [](const Reaction* a, const Reaction* b) { return a->id < b->id; });
    }

    std::vector<Molecule> molecules_;
    std::vector<TemplateDef> templates_;
    std::vector<Reaction> reactions_;
    int fingerprint_bits_ = 256;
    std::optional<NetworkGenConfig> gen_config_;

private:
    std::unordered_map<std::string, std::size_t> mol_index_;
    std::unordered_map<std::string, std::size_t> tpl_index_;
    std::unordered_map<std::string, std::vector<const Reaction*>> by_product_;
    std::unordered_map<std::string, std::vector<const Reaction*>> by_reactant_;
    std::unordered_set<std::string> buyables_;
};

namespace detail {

inline std::string padded_id(char prefix, std::size_t n, int width) {
    std::string digits = std::to_string(n);
    std::string out(1, prefix);
    for (int i = static_cast<int>(digits.size()); i < width; ++i) out.push_back('0');
    out += digits;
    return out;
}

inline int id_width(std::size_t count) {
    int w = 1;
    for (std::size_t c = count; c >= 10; c /= 10) ++w;
    return std::max(w, 3);
}

} // namespace detail

// Layered DAG generator: layer 0 is all buyable; each deeper molecule gets
// 1..max_producers producing reactions drawing reactants from strictly lower
// layers, so acyclicity and universal producibility hold by construction.
inline ReactionNetwork ReactionNetwork::generate(const NetworkGenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    ReactionNetwork net;
    net.fingerprint_bits_ = cfg.fingerprint_bits;
    net.gen_config_ = cfg;

    const std::size_t total =
        static_cast<std::size_t>(cfg.layers) * cfg.molecules_per_layer;
    const int mol_w = detail::id_width(total);

    // Template pools per arity; reuse makes forward template lookup meaningful.
    const std::size_t uni_pool = std::max<std::size_t>(1, total / 8);
    const std::size_t bi_pool = std::max<std::size_t>(1, total / 8);
    const int tpl_w = detail::id_width(uni_pool + bi_pool);
    for (std::size_t i = 0; i < uni_pool; ++i)
        net.templates_.push_back(
            {detail::padded_id('T', i, tpl_w), 1, BitVec::random(cfg.fingerprint_bits, rng)});
    for (std::size_t i = 0; i < bi_pool; ++i)
        net.templates_.push_back({detail::padded_id('T', uni_pool + i, tpl_w), 2,
                                  BitVec::random(cfg.fingerprint_bits, rng)});

    std::vector<std::size_t> lower;        // molecule indices in layers < current
    std::vector<std::size_t> lower_buyable;
    std::size_t rxn_counter = 0;
    const int rxn_w =
        detail::id_width(total * cfg.max_producers_per_molecule);

    // Reactants prefer nearby layers so synthesis depth tracks layer index;
    // molecules are laid out layer-major, per_layer apiece.
    auto pick_lower = [&](int cur_layer) -> std::size_t {
        int window = std::min(cur_layer, 3);
        int lay = cur_layer - 1 - static_cast<int>(rng.below(window));
        return static_cast<std::size_t>(lay) * cfg.molecules_per_layer +
               rng.below(cfg.molecules_per_layer);
    };

    for (int layer = 0; layer < cfg.layers; ++layer) {
        const std::size_t layer_begin = net.molecules_.size();
        for (int i = 0; i < cfg.molecules_per_layer; ++i) {
            Molecule m;
            m.id = detail::padded_id('M', net.molecules_.size(), mol_w);
            if (layer == 0) {
                m.size = 1 + static_cast<int>(rng.below(6));
                m.buyable = true;
                m.fingerprint = BitVec::random(cfg.fingerprint_bits, rng);
                net.molecules_.push_back(std::move(m));
                continue;
            }
            m.buyable = rng.unit() < cfg.bb_extra_fraction;

            const int n_prod =
                1 + static_cast<int>(rng.below(cfg.max_producers_per_molecule));
            struct Draft {
                std::vector<std::size_t> reactants;
                double plausibility;
                std::string template_id;
            };
            std::vector<Draft> drafts;
            for (int p = 0; p < n_prod; ++p) {
                Draft d;
                bool bimolecular = lower.size() >= 2 &&
                                   rng.unit() < cfg.bimolecular_fraction;
                std::size_t r1 = pick_lower(layer);
                d.reactants.push_back(r1);
                if (bimolecular) {
                    std::size_t r2 = r1;
                    for (int attempt = 0; attempt < 16 && r2 == r1; ++attempt) {
                        if (!lower_buyable.empty() && rng.unit() < cfg.bb_partner_prob)
                            r2 = lower_buyable[rng.below(lower_buyable.size())];
                        else
                            r2 = pick_lower(layer);
                    }
                    if (r2 != r1) d.reactants.push_back(r2);
                }
                d.plausibility = cfg.plausibility_min +
                                 rng.unit() * (cfg.plausibility_max - cfg.plausibility_min);
                const bool is_bi = d.reactants.size() == 2;
                std::size_t pool_off = is_bi ? uni_pool : 0;
                std::size_t pool_size = is_bi ? bi_pool : uni_pool;
                d.template_id = net.templates_[pool_off + rng.below(pool_size)].id;
                drafts.push_back(std::move(d));
            }

            int max_reactant_size = 1;
            for (const auto& d : drafts)
                for (std::size_t ri : d.reactants)
                    max_reactant_size =
                        std::max(max_reactant_size, net.molecules_[ri].size);
            m.size = max_reactant_size + static_cast<int>(rng.below(3));

            // Fingerprint locality: derive from the largest reactant of the
            // first producer, flipping ~4 bits per unit of size growth.
            std::size_t base = drafts.front().reactants.front();
            for (std::size_t ri : drafts.front().reactants)
                if (net.molecules_[ri].size > net.molecules_[base].size) base = ri;
            m.fingerprint = net.molecules_[base].fingerprint;
            std::size_t flips = std::max<std::size_t>(
                1, static_cast<std::size_t>(cfg.fingerprint_bits / 64) *
                       std::max(0, m.size - net.molecules_[base].size));
            m.fingerprint.flip_random(
                std::min<std::size_t>(flips, cfg.fingerprint_bits / 4), rng);

            const std::string product_id = m.id;
            net.molecules_.push_back(std::move(m));
            for (auto& d : drafts) {
                Reaction r;
                r.id = detail::padded_id('R', rxn_counter++, rxn_w);
                for (std::size_t ri : d.reactants)
                    r.reactants.push_back(net.molecules_[ri].id);
                std::sort(r.reactants.begin(), r.reactants.end());
                r.product = product_id;
                r.template_id = d.template_id;
                r.plausibility = d.plausibility;
                net.reactions_.push_back(std::move(r));
            }
        }
        for (std::size_t idx = layer_begin; idx < net.molecules_.size(); ++idx) {
            lower.push_back(idx);
            if (net.molecules_[idx].buyable) lower_buyable.push_back(idx);
        }
    }

    net.finalize();
    return net;
}

inline nlohmann::json gen_config_to_json(const NetworkGenConfig& c) {
    return nlohmann::json{{"layers", c.layers},
                          {"molecules_per_layer", c.molecules_per_layer},
                          {"bb_extra_fraction", c.bb_extra_fraction},
                          {"max_producers_per_molecule", c.max_producers_per_molecule},
                          {"bimolecular_fraction", c.bimolecular_fraction},
                          {"bb_partner_prob", c.bb_partner_prob},
                          {"plausibility_min", c.plausibility_min},
                          {"plausibility_max", c.plausibility_max},
                          {"fingerprint_bits", c.fingerprint_bits},
                          {"seed", c.seed}};
}

inline NetworkGenConfig gen_config_from_json(const nlohmann::json& j) {
    NetworkGenConfig c;
    c.layers = j.value("layers", c.layers);
    c.molecules_per_layer = j.value("molecules_per_layer", c.molecules_per_layer);
    c.bb_extra_fraction = j.value("bb_extra_fraction", c.bb_extra_fraction);
    c.max_producers_per_molecule =
        j.value("max_producers_per_molecule", c.max_producers_per_molecule);
    c.bimolecular_fraction = j.value("bimolecular_fraction", c.bimolecular_fraction);
    c.bb_partner_prob = j.value("bb_partner_prob", c.bb_partner_prob);
    c.plausibility_min = j.value("plausibility_min", c.plausibility_min);
    c.plausibility_max = j.value("plausibility_max", c.plausibility_max);
    c.fingerprint_bits = j.value("fingerprint_bits", c.fingerprint_bits);
    c.seed = j.value("seed", c.seed);
    return c;
}

inline nlohmann::json ReactionNetwork::to_json() const {
    nlohmann::json j;
    j["meta"] = {{"fingerprint_bits", fingerprint_bits_}, {"seed", seed()}};
    if (gen_config_) j["meta"]["config"] = gen_config_to_json(*gen_config_);
    auto& mols = j["molecules"] = nlohmann::json::array();
    for (const auto& m : molecules_)
        mols.push_back({{"id", m.id},
                        {"size", m.size},
                        {"buyable", m.buyable},
                        {"fp_hex", m.fingerprint.to_hex()}});
    auto& tpls = j["templates"] = nlohmann::json::array();
    for (const auto& t : templates_)
        tpls.push_back(
            {{"id", t.id}, {"arity", t.arity}, {"fp_hex", t.fingerprint.to_hex()}});
    auto& rxns = j["reactions"] = nlohmann::json::array();
    for (const auto& r : reactions_)
        rxns.push_back({{"id", r.id},
                        {"reactants", r.reactants},
                        {"product", r.product},
                        {"template", r.template_id},
                        {"plausibility", r.plausibility}});
    return j;
}

inline ReactionNetwork ReactionNetwork::from_json(const nlohmann::json& j) {
    ReactionNetwork net;
    try {
        net.fingerprint_bits_ = j.at("meta").at("fingerprint_bits").get<int>();
        if (j.at("meta").contains("config"))
            net.gen_config_ = gen_config_from_json(j["meta"]["config"]);
        for (const auto& m : j.at("molecules")) {
            Molecule mol;
            mol.id = m.at("id").get<std::string>();
            mol.size = m.at("size").get<int>();
            mol.buyable = m.at("buyable").get<bool>();
            mol.fingerprint = BitVec::from_hex(m.at("fp_hex").get<std::string>());
            if (static_cast<int>(mol.fingerprint.size()) != net.fingerprint_bits_)
                throw ParseError("molecule " + mol.id + ": fingerprint length mismatch");
            net.molecules_.push_back(std::move(mol));
        }
        for (const auto& t : j.at("templates")) {
            TemplateDef tpl;
            tpl.id = t.at("id").get<std::string>();
            tpl.arity = t.at("arity").get<int>();
            tpl.fingerprint = BitVec::from_hex(t.at("fp_hex").get<std::string>());
            net.templates_.push_back(std::move(tpl));
        }
        for (const auto& r : j.at("reactions")) {
            Reaction rxn;
            rxn.id = r.at("id").get<std::string>();
            rxn.reactants = r.at("reactants").get<std::vector<std::string>>();
            std::sort(rxn.reactants.begin(), rxn.reactants.end());
            rxn.product = r.at("product").get<std::string>();
            rxn.template_id = r.at("template").get<std::string>();
            rxn.plausibility = r.at("plausibility").get<double>();
            net.reactions_.push_back(std::move(rxn));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network file: ") + e.what());
    }
    net.finalize();
    return net;
}

inline void ReactionNetwork::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << to_json().dump(2) << "\n";
}

inline ReactionNetwork ReactionNetwork::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network file ") + path + ": " + e.what());
    }
    return from_json(j);
}

} // namespace bidesp
