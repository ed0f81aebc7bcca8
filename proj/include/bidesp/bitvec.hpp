#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidesp/rng.hpp"

namespace bidesp {

// Fixed-length bit vector used for molecule/template fingerprints.
// Bit i of nibble j in the hex encoding is laid out big-endian: bit 0 is the
// most significant bit of the first hex digit.
class BitVec {
public:
    BitVec() = default;

    explicit BitVec(std::size_t bits)
        : bits_(bits), words_((bits + 63) / 64, 0) {}

    static BitVec random(std::size_t bits, Rng& rng) {
        BitVec v(bits);
        for (auto& w : v.words_) w = rng.next();
        v.mask_tail();
        return v;
    }

    std::size_t size() const { return bits_; }

    bool test(std::size_t i) const {
        return (words_[i / 64] >> (63 - i % 64)) & 1u;
    }

    void set(std::size_t i, bool value) {
        std::uint64_t mask = 1ULL << (63 - i % 64);
        if (value)
            words_[i / 64] |= mask;
        else
            words_[i / 64] &= ~mask;
    }

    void flip(std::size_t i) { words_[i / 64] ^= 1ULL << (63 - i % 64); }

    // Flips k distinct random positions.
    void flip_random(std::size_t k, Rng& rng) {
        if (k >= bits_) k = bits_;
        std::vector<std::size_t> chosen;
        chosen.reserve(k);
        while (chosen.size() < k) {
            std::size_t p = rng.below(bits_);
            bool seen = false;
            for (std::size_t c : chosen)
                if (c == p) { seen = true; break; }
            if (!seen) {
                chosen.push_back(p);
                flip(p);
            }
        }
    }

    std::size_t popcount() const {
        std::size_t n = 0;
        for (auto w : words_) n += std::popcount(w);
        return n;
    }

    BitVec operator^(const BitVec& o) const {
        check_len(o);
        BitVec r(bits_);
        for (std::size_t i = 0; i < words_.size(); ++i)
            r.words_[i] = words_[i] ^ o.words_[i];
        return r;
    }

    std::size_t and_count(const BitVec& o) const {
        check_len(o);
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += std::popcount(words_[i] & o.words_[i]);
        return n;
    }

    std::size_t or_count(const BitVec& o) const {
        check_len(o);
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += std::popcount(words_[i] | o.words_[i]);
        return n;
    }

    bool operator==(const BitVec& o) const {
        return bits_ == o.bits_ && words_ == o.words_;
    }

    std::string to_hex() const {
        static const char digits[] = "0123456789abcdef";
        std::string out;
        out.reserve(bits_ / 4);
        for (std::size_t nib = 0; nib < bits_ / 4; ++nib) {
            unsigned v = 0;
            for (std::size_t b = 0; b < 4; ++b)
                v = (v << 1) | (test(nib * 4 + b) ? 1u : 0u);
            out.push_back(digits[v]);
        }
        return out;
    }

    static BitVec from_hex(const std::string& hex) {
        BitVec v(hex.size() * 4);
        for (std::size_t nib = 0; nib < hex.size(); ++nib) {
            char c = hex[nib];
            unsigned d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = 10 + (c - 'a');
            else if (c >= 'A' && c <= 'F') d = 10 + (c - 'A');
            else throw std::invalid_argument("bad hex digit in fingerprint");
            for (std::size_t b = 0; b < 4; ++b)
                if ((d >> (3 - b)) & 1u) v.set(nib * 4 + b, true);
        }
        return v;
    }

private:
    void check_len(const BitVec& o) const {
        if (bits_ != o.bits_)
            throw std::invalid_argument("fingerprint length mismatch");
    }
    void mask_tail() {
        if (bits_ % 64)
            words_.back() &= ~0ULL << (64 - bits_ % 64);
    }

    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// |a AND b| / |a OR b|; 0/0 defined as 1 (identical empty vectors).
inline double tanimoto(const BitVec& a, const BitVec& b) {
    std::size_t u = a.or_count(b);
    if (u == 0) return 1.0;
    return static_cast<double>(a.and_count(b)) / static_cast<double>(u);
}

// Cosine similarity between {0,1} vectors; an all-zero vector has
// similarity 0 to everything.
inline double cosine(const BitVec& a, const BitVec& b) {
    std::size_t na = a.popcount();
    std::size_t nb = b.popcount();
    if (na == 0 || nb == 0) return 0.0;
    return static_cast<double>(a.and_count(b)) /
           (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)));
}

} // namespace bidesp
