#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tscc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Bad arguments or violated preconditions.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A point tuple the geometric kernels cannot evaluate (repeated points etc.).
class degenerate_tuple_error : public validation_error {
public:
    using validation_error::validation_error;
};

/// Failures that arise from the data during computation (zero degrees,
/// eigensolver breakdown, empty clusters).
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File and serialization problems.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Deterministic random stream. mt19937_64 plus hand-rolled conversions so
// that sampled values do not depend on the standard library's distribution
// implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // rejection-free modulo is fine here; n is tiny compared to 2^64
        return engine_() % n;
    }

    /// Standard normal via Box-Muller (no rejection, fully deterministic).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Derive an independent substream; spawned streams can spawn again.
    RandomStream spawn(std::uint64_t index) const {
        // splitmix-style mixing of (seed, index)
        std::uint64_t z = seed_mix_ + 0x9E3779B97F4A7C15ull * (index + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z ^= z >> 31;
        RandomStream child(z);
        child.seed_mix_ = z;
        return child;
    }

    void remember_seed(std::uint64_t s) { seed_mix_ = s; }

    static RandomStream seeded(std::uint64_t seed) {
        RandomStream s(seed);
        s.remember_seed(seed);
        return s;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_mix_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Compensated (Kahan) accumulator.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// Number of permutations of size r out of n elements: n(n-1)...(n-r+1).
/// By convention perm(n, 0) = 1 and perm(n, r) = 0 when r > n.
inline std::uint64_t perm(std::uint64_t n, std::uint64_t r) {
    if (r > n) return 0;
    std::uint64_t p = 1;
    for (std::uint64_t i = 0; i < r; ++i) p *= (n - i);
    return p;
}

inline std::uint64_t factorial(std::uint64_t n) { return perm(n, n); }

/// Binomial coefficient table holder for combinadic ranking.
class BinomialTable {
public:
    BinomialTable(int n, int r) : n_(n), r_(r), c_((n + 1) * (r + 1), 0) {
        for (int i = 0; i <= n; ++i) {
            at(i, 0) = 1;
            for (int j = 1; j <= std::min(i, r); ++j)
                at(i, j) = choose(i - 1, j - 1) + choose(i - 1, j);
        }
    }
    std::uint64_t choose(int i, int j) const {
        if (j < 0 || j > r_ || i < 0) return 0;
        if (j > i) return 0;
        return c_[static_cast<std::size_t>(i) * (r_ + 1) + j];
    }

private:
    std::uint64_t& at(int i, int j) {
        return c_[static_cast<std::size_t>(i) * (r_ + 1) + j];
    }
    int n_, r_;
    std::vector<std::uint64_t> c_;
};

/// Rank of a strictly increasing index combination in colexicographic order.
inline std::uint64_t combination_rank(const std::vector<int>& comb,
                                      const BinomialTable& table) {
    std::uint64_t rank = 0;
    for (std::size_t j = 0; j < comb.size(); ++j)
        rank += table.choose(comb[j], static_cast<int>(j) + 1);
    return rank;
}

/// Advance a strictly increasing combination over {0..n-1}; returns false
/// after the last one.
inline bool next_combination(std::vector<int>& comb, int n) {
    const int r = static_cast<int>(comb.size());
    for (int j = 0; j < r; ++j) {
        const int limit = (j + 1 < r) ? comb[j + 1] : n;
        if (comb[j] + 1 < limit) {
            ++comb[j];
            for (int t = 0; t < j; ++t) comb[t] = t;
            return true;
        }
    }
    return false;
}

inline std::vector<int> first_combination(int r) {
    std::vector<int> comb(r);
    for (int j = 0; j < r; ++j) comb[j] = j;
    return comb;
}

}  // namespace tscc
