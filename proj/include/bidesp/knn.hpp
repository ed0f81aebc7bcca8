#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "bidesp/bitvec.hpp"
#include "bidesp/core.hpp"
#include "bidesp/rng.hpp"

namespace bidesp {

enum class IndexMode { Exact, Quantized };

struct PqParams {
    int subvectors = 8;
    int codebook_size = 16;
    int kmeans_iters = 25;
};

// Fingerprint nearest-neighbor index over building blocks. Exact mode stores
// raw vectors; quantized mode product-quantizes each vector with per-subvector
// binary codebooks learned by seeded k-means under Hamming distortion
// (centroid update is per-coordinate majority vote).
class VectorIndex {
public:
    static VectorIndex build(std::vector<std::pair<std::string, BitVec>> items,
                             IndexMode mode, PqParams params = {},
                             std::uint64_t seed = 0) {
        if (items.empty()) throw InputError("VectorIndex: no items");
        VectorIndex idx;
        idx.mode_ = mode;
        idx.params_ = params;
        idx.bits_ = items.front().second.size();
        std::unordered_set<std::string> ids;
        for (const auto& [id, v] : items) {
            if (v.size() != idx.bits_)
                throw InputError("VectorIndex: vector length mismatch for " + id);
            if (!ids.insert(id).second)
                throw InputError("VectorIndex: duplicate id " + id);
        }
        idx.items_ = std::move(items);
        if (mode == IndexMode::Quantized) idx.train_pq(seed);
        return idx;
    }

    std::size_t size() const { return items_.size(); }
    std::size_t bits() const { return bits_; }
    IndexMode mode() const { return mode_; }

    const std::vector<std::pair<std::string, BitVec>>& items() const {
        return items_;
    }

    // Top-k by cosine similarity, descending, ties by id ascending. Quantized
    // mode scores the query against reconstructed centroids.
    std::vector<std::pair<std::string, double>> query(const BitVec& q,
                                                      std::size_t k) const {
        if (q.size() != bits_) throw InputError("VectorIndex: query length mismatch");
        if (k < 1) throw InputError("VectorIndex: k must be >= 1");
        std::vector<std::pair<std::string, double>> scored;
        scored.reserve(items_.size());
        if (mode_ == IndexMode::Exact) {
            for (const auto& [id, v] : items_) scored.push_back({id, cosine(q, v)});
        } else {
            for (std::size_t i = 0; i < items_.size(); ++i)
                scored.push_back({items_[i].first, cosine(q, reconstruct(i))});
        }
        auto cmp = [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        };
        std::size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), cmp);
        scored.resize(take);
        return scored;
    }

    // Mean fraction of exact top-k ids recovered by the quantized index.
    static double recall_at_k(const VectorIndex& quantized, const VectorIndex& exact,
                              const std::vector<BitVec>& queries, std::size_t k) {
        if (quantized.size() != exact.size())
            throw InputError("recall_at_k: item sets differ in size");
        std::unordered_set<std::string> a, b;
        for (const auto& [id, v] : quantized.items_) a.insert(id);
        for (const auto& [id, v] : exact.items_) b.insert(id);
        if (a != b) throw InputError("recall_at_k: item sets differ");
        if (queries.empty()) throw InputError("recall_at_k: no queries");
        double total = 0.0;
        for (const auto& q : queries) {
            auto true_top = exact.query(q, k);
            auto approx_top = quantized.query(q, k);
            std::unordered_set<std::string> got;
            for (const auto& [id, s] : approx_top) got.insert(id);
            std::size_t hit = 0;
            for (const auto& [id, s] : true_top) hit += got.count(id);
            total += static_cast<double>(hit) / static_cast<double>(true_top.size());
        }
        return total / static_cast<double>(queries.size());
    }

    BitVec reconstruct(std::size_t item) const {
        BitVec out(bits_);
        const std::size_t sub_bits = bits_ / params_.subvectors;
        for (int s = 0; s < params_.subvectors; ++s) {
            const BitVec& c = codebooks_[s][codes_[item][s]];
            for (std::size_t b = 0; b < sub_bits; ++b)
                if (c.test(b)) out.set(s * sub_bits + b, true);
        }
        return out;
    }

    double mean_reconstruction_error() const {
        if (mode_ != IndexMode::Quantized)
            throw ContractViolation("reconstruction error requires quantized mode");
        double total = 0.0;
        for (std::size_t i = 0; i < items_.size(); ++i)
            total += static_cast<double>((items_[i].second ^ reconstruct(i)).popcount());
        return total / static_cast<double>(items_.size());
    }

private:
    void train_pq(std::uint64_t seed) {
        if (bits_ % params_.subvectors != 0)
            throw InputError("VectorIndex: vector length not divisible by subvector count");
        const std::size_t sub_bits = bits_ / params_.subvectors;
        const std::size_t n = items_.size();
        Rng rng(seed);
        codebooks_.assign(params_.subvectors, {});
        codes_.assign(n, std::vector<std::uint16_t>(params_.subvectors, 0));

        for (int s = 0; s < params_.subvectors; ++s) {
            std::vector<BitVec> subs;
            subs.reserve(n);
            for (const auto& [id, v] : items_) {
                BitVec sv(sub_bits);
                for (std::size_t b = 0; b < sub_bits; ++b)
                    if (v.test(s * sub_bits + b)) sv.set(b, true);
                subs.push_back(std::move(sv));
            }
            // Init with distinct subvector values (covers the data exactly
            // when codebook_size >= number of distinct values).
            std::vector<BitVec> centroids;
            {
                std::vector<std::size_t> perm(n);
                for (std::size_t i = 0; i < n; ++i) perm[i] = i;
                for (std::size_t i = 0; i + 1 < n; ++i)
                    std::swap(perm[i], perm[i + rng.below(n - i)]);
                for (std::size_t i = 0;
                     i < n && centroids.size() <
                                  static_cast<std::size_t>(params_.codebook_size);
                     ++i) {
                    const BitVec& cand = subs[perm[i]];
                    bool dup = false;
                    for (const auto& c : centroids)
                        if (c == cand) { dup = true; break; }
                    if (!dup) centroids.push_back(cand);
                }
            }
            std::vector<std::uint16_t> assign(n, 0);
            for (int iter = 0; iter < params_.kmeans_iters; ++iter) {
                bool changed = false;
                for (std::size_t i = 0; i < n; ++i) {
                    std::size_t best = 0;
                    std::size_t best_d = (subs[i] ^ centroids[0]).popcount();
                    for (std::size_t c = 1; c < centroids.size(); ++c) {
                        std::size_t d = (subs[i] ^ centroids[c]).popcount();
                        if (d < best_d) { best_d = d; best = c; }
                    }
                    if (assign[i] != best) { assign[i] = static_cast<std::uint16_t>(best); changed = true; }
                }
                if (!changed && iter > 0) break;
                // Majority-vote centroid update (ties resolve to 0).
                for (std::size_t c = 0; c < centroids.size(); ++c) {
                    std::vector<std::size_t> ones(sub_bits, 0);
                    std::size_t members = 0;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (assign[i] != c) continue;
                        ++members;
                        for (std::size_t b = 0; b < sub_bits; ++b)
                            if (subs[i].test(b)) ++ones[b];
                    }
                    if (members == 0) {
                        centroids[c] = subs[rng.below(n)];
                        continue;
                    }
                    BitVec nc(sub_bits);
                    for (std::size_t b = 0; b < sub_bits; ++b)
                        if (ones[b] * 2 > members) nc.set(b, true);
                    centroids[c] = std::move(nc);
                }
            }
            // Final assignment against the last centroid update.
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best = 0;
                std::size_t best_d = (subs[i] ^ centroids[0]).popcount();
                for (std::size_t c = 1; c < centroids.size(); ++c) {
                    std::size_t d = (subs[i] ^ centroids[c]).popcount();
                    if (d < best_d) { best_d = d; best = c; }
                }
                codes_[i][s] = static_cast<std::uint16_t>(best);
            }
            codebooks_[s] = std::move(centroids);
        }
    }

    IndexMode mode_ = IndexMode::Exact;
    PqParams params_;
    std::size_t bits_ = 0;
    std::vector<std::pair<std::string, BitVec>> items_;
    std::vector<std::vector<BitVec>> codebooks_;        // [subvector][centroid]
    std::vector<std::vector<std::uint16_t>> codes_;     // [item][subvector]
};

} // namespace bidesp
