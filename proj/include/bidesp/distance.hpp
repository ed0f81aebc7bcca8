#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bidesp/core.hpp"
#include "bidesp/network.hpp"

namespace bidesp {

// Minimum synthesis cost per molecule (inf when unsynthesizable and not
// buyable), computed exactly by bottom-up DP over the acyclic network.
struct CostTable {
    CostMode mode = CostMode::Unit;
    std::unordered_map<std::string, double> vm;

    double at(const std::string& id) const {
        auto it = vm.find(id);
        if (it == vm.end()) throw InputError("unknown molecule id: " + id);
        return it->second;
    }
};

inline CostTable compute_vm(const ReactionNetwork& net, CostMode mode) {
    auto order = net.topological_molecules();
    if (!order) throw ContractViolation("compute_vm: network is cyclic");
    CostTable table;
    table.mode = mode;
    for (const auto& id : *order) {
        const Molecule& m = net.molecule(id);
        double best = m.buyable ? 0.0 : kInf;
        if (!m.buyable) {
            for (const Reaction* r : net.producers_of(id)) {
                double c = r->cost(mode);
                bool ok = true;
                for (const auto& x : r->reactants) {
                    double v = table.vm.at(x);
                    if (v == kInf) { ok = false; break; }
                    c += v;
                }
                if (ok) best = std::min(best, c);
            }
        }
        table.vm[id] = best;
    }
    return table;
}

// best_thru values for a fixed source m1: for every molecule m, the minimum
// cost of a route to m whose DAG contains m1 (leaf or interior), via the
// through-branch recursion with best_thru(m1) = vm(m1). Returned as a map
// keyed by molecule id; entries are inf when no containing route exists.
inline std::unordered_map<std::string, double> compute_through_costs(
    const ReactionNetwork& net, const std::string& m1, CostMode mode,
    const CostTable& vm) {
    net.molecule(m1);
    auto order = net.topological_molecules();
    if (!order) throw ContractViolation("compute_through_costs: network is cyclic");
    std::unordered_map<std::string, double> thru;
    for (const auto& id : *order) {
        if (id == m1) {
            thru[id] = vm.at(id);
            continue;
        }
        double best = kInf;
        for (const Reaction* r : net.producers_of(id)) {
            double base = r->cost(mode);
            bool ok = true;
            for (const auto& x : r->reactants) {
                double v = vm.at(x);
                if (v == kInf) { ok = false; break; }
                base += v;
            }
            if (!ok) continue;
            // Designate exactly one reactant as the through branch.
            for (const auto& x : r->reactants) {
                double t = thru.at(x);
                if (t == kInf) continue;
                best = std::min(best, base - vm.at(x) + t);
            }
        }
        thru[id] = best;
    }
    return thru;
}

// Synthetic distance D(m1, m2): cheapest route to m2 granted m1 at zero
// marginal cost beyond m1's own synthesis; inf when no containing route.
inline double compute_distance(const ReactionNetwork& net, const std::string& m1,
                               const std::string& m2, CostMode mode) {
    CostTable vm = compute_vm(net, mode);
    double base = vm.at(m1);
    if (base == kInf) return kInf;
    auto thru = compute_through_costs(net, m1, mode, vm);
    double t = thru.at(m2);
    return t == kInf ? kInf : t - base;
}

struct DistanceRecord {
    std::string m;
    std::string p_star;
    double d = 0.0;  // inf for negatives
};

// Offline extraction of (m, p*, D) training pairs under unit costs: for each
// non-buyable target, every molecule with finite D <= d_cap, plus
// `negatives_per_target` unreachable molecules with Tanimoto < sim_threshold
// labeled inf. Deterministic given seed.
inline std::vector<DistanceRecord> extract_pairs(const ReactionNetwork& net,
                                                 double d_cap,
                                                 int negatives_per_target,
                                                 double sim_threshold,
                                                 std::uint64_t seed) {
    if (sim_threshold < 0 || sim_threshold > 1)
        throw InputError("extract_pairs: sim_threshold must be in [0,1]");
    CostTable vm = compute_vm(net, CostMode::Unit);
    // One through-row per source molecule covers all targets.
    std::unordered_map<std::string, std::unordered_map<std::string, double>> rows;
    for (const auto& m : net.molecules())
        if (vm.at(m.id) != kInf)
            rows.emplace(m.id, compute_through_costs(net, m.id, CostMode::Unit, vm));
    std::vector<DistanceRecord> out;
    for (const auto& target : net.molecules()) {
        if (target.buyable) continue;
        std::vector<DistanceRecord> negatives_pool;
        for (const auto& m : net.molecules()) {
            if (m.id == target.id) continue;
            double d = kInf;
            if (auto it = rows.find(m.id); it != rows.end()) {
                double t = it->second.at(target.id);
                if (t != kInf) d = t - vm.at(m.id);
            }
            if (d != kInf) {
                if (d <= d_cap) out.push_back({m.id, target.id, d});
            } else if (tanimoto(m.fingerprint, target.fingerprint) < sim_threshold) {
                negatives_pool.push_back({m.id, target.id, kInf});
            }
        }
        Rng rng(hash_combine(seed, stable_hash(target.id)));
        int want = std::min<int>(negatives_per_target,
                                 static_cast<int>(negatives_pool.size()));
        for (int i = 0; i < want; ++i) {
            std::size_t pick = i + rng.below(negatives_pool.size() - i);
            std::swap(negatives_pool[i], negatives_pool[pick]);
            out.push_back(negatives_pool[i]);
        }
    }
    return out;
}

inline void write_pairs_csv(const std::vector<DistanceRecord>& records,
                            std::ostream& out) {
    out << "m,p_star,d\n";
    for (const auto& r : records) {
        out << r.m << ',' << r.p_star << ',';
        if (r.d == kInf)
            out << "inf";
        else
            out << r.d;
        out << '\n';
    }
}

inline void write_pairs_csv(const std::vector<DistanceRecord>& records,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    write_pairs_csv(records, out);
}

} // namespace bidesp
