#pragma once

// Deterministic randomness for the whole pipeline.
//
// RngStream wraps a fixed 64-bit Mersenne engine; all variates are produced
// by inverse-cdf from its uniforms, so identical seeds give bit-identical
// sequences on every platform. Child streams are derived from (seed, tag)
// pairs, which keeps independent consumers (pools, dots, estimation nodes)
// from perturbing each other's draws.
//
// SobolSequence is a 32-bit digital sequence in up to 21 dimensions with a
// per-instance random digital shift (xor scramble) drawn from the owning
// stream.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "rarering/special_functions.hpp"

namespace rarering {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Uniform on the open interval (0,1); never returns an exact 0 or 1,
    // so inverse-cdf transforms stay finite.
    double uniform() {
        std::uint64_t bits = engine_() >> 11;               // top 53 bits
        return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal by inverse cdf.
    double normal() { return normal_ppf(uniform()); }

    std::uint64_t bits() { return engine_(); }

    // Independent stream identified by (seed, tag, index).
    RngStream child(std::uint64_t tag, std::uint64_t index = 0) const {
        std::uint64_t s = detail::splitmix64(seed_ ^ detail::splitmix64(tag + 0x100));
        s = detail::splitmix64(s ^ detail::splitmix64(index + 0x9000));
        return RngStream(s);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

namespace detail {

// Primitive polynomial degree, coefficient bits and initial direction
// seeds for Sobol dimensions 2..21 (dimension 1 is van der Corput).
struct SobolRow {
    int s;
    unsigned a;
    unsigned m[8];
};

inline const SobolRow* sobol_table() {
    static const SobolRow rows[20] = {
        {1, 0, {1}},
        {2, 1, {1, 3}},
        {3, 1, {1, 3, 1}},
        {3, 2, {1, 1, 1}},
        {4, 1, {1, 1, 3, 3}},
        {4, 4, {1, 3, 5, 13}},
        {5, 2, {1, 1, 5, 5, 17}},
        {5, 4, {1, 1, 5, 5, 5}},
        {5, 7, {1, 1, 7, 11, 19}},
        {5, 11, {1, 1, 5, 1, 1}},
        {5, 13, {1, 1, 1, 3, 11}},
        {5, 14, {1, 3, 5, 5, 31}},
        {6, 1, {1, 3, 3, 9, 7, 49}},
        {6, 13, {1, 1, 1, 15, 21, 21}},
        {6, 16, {1, 3, 1, 13, 27, 49}},
        {6, 19, {1, 1, 1, 15, 7, 5}},
        {6, 22, {1, 3, 1, 15, 13, 25}},
        {6, 25, {1, 1, 5, 5, 19, 61}},
        {7, 1, {1, 3, 7, 11, 23, 15, 103}},
        {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    };
    return rows;
}

} // namespace detail

class SobolSequence {
public:
    static constexpr int max_dim = 21;

    // The digital shift is drawn from `scramble_source`, one word per
    // dimension; pass distinct child streams for independent scrambles.
    SobolSequence(int dim, RngStream& scramble_source) : dim_(dim) {
        if (dim < 1 || dim > max_dim)
            throw std::invalid_argument("SobolSequence: dim must be in [1,21]");
        v_.assign(dim, std::vector<std::uint32_t>(n_bits_));
        for (int k = 0; k < n_bits_; ++k) v_[0][k] = 1u << (31 - k);
        for (int j = 1; j < dim; ++j) {
            const auto& row = detail::sobol_table()[j - 1];
            for (int k = 0; k < row.s; ++k)
                v_[j][k] = row.m[k] << (31 - k);
            for (int k = row.s; k < n_bits_; ++k) {
                std::uint32_t val = v_[j][k - row.s] ^ (v_[j][k - row.s] >> row.s);
                for (int i = 1; i < row.s; ++i)
                    if ((row.a >> (row.s - 1 - i)) & 1u) val ^= v_[j][k - i];
                v_[j][k] = val;
            }
        }
        state_.assign(dim, 0);
        shift_.assign(dim, 0);
        for (int j = 0; j < dim; ++j)
            shift_[j] = static_cast<std::uint32_t>(scramble_source.bits() >> 32);
    }

    int dim() const { return dim_; }

    // Next point of the shifted sequence, all coordinates in (0,1).
    std::vector<double> next() {
        std::uint64_t i = index_++;
        // Gray-code update: flip the direction of the lowest zero bit of i.
        int c = 0;
        while (i & 1ull) { i >>= 1; ++c; }
        if (c >= n_bits_) c = n_bits_ - 1;
        std::vector<double> u(dim_);
        for (int j = 0; j < dim_; ++j) {
            state_[j] ^= v_[j][c];
            std::uint32_t bits = state_[j] ^ shift_[j];
            u[j] = (static_cast<double>(bits) + 0.5) * (1.0 / 4294967296.0);
        }
        return u;
    }

private:
    static constexpr int n_bits_ = 32;
    int dim_;
    std::uint64_t index_ = 0;
    std::vector<std::vector<std::uint32_t>> v_;
    std::vector<std::uint32_t> state_;
    std::vector<std::uint32_t> shift_;
};

} // namespace rarering
