#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tscc/common.hpp"
#include "tscc/curvature.hpp"

namespace tscc {

enum class TensorVariant { polar_affine, polar_linear, polar_power, perfect };

inline const char* variant_name(TensorVariant v) {
    switch (v) {
        case TensorVariant::polar_affine: return "polar_affine";
        case TensorVariant::polar_linear: return "polar_linear";
        case TensorVariant::polar_power: return "polar_power";
        case TensorVariant::perfect: return "perfect";
    }
    return "?";
}

/// Which affinity tensor to build, and with what parameters.
struct TensorSpec {
    TensorVariant variant = TensorVariant::polar_affine;
    double sigma = 1.0;
    double q = 1.0;  // exponent for polar_power
    int d = 1;
    std::vector<int> ground_truth;  // cluster id per point; required by perfect

    void validate() const {
        if (d < 0) throw validation_error("TensorSpec: d must be >= 0");
        if (variant != TensorVariant::perfect && !(sigma > 0.0))
            throw validation_error("TensorSpec: sigma must be positive");
        if (variant == TensorVariant::polar_power && !(q >= 1.0))
            throw validation_error("TensorSpec: q must be >= 1");
        if (variant == TensorVariant::perfect && ground_truth.empty())
            throw validation_error(
                "TensorSpec: perfect variant requires ground truth");
    }

    /// Number of indices of the tensor: d+2, or d+1 for the linear variant.
    int tuple_size() const {
        return variant == TensorVariant::polar_linear ? d + 1 : d + 2;
    }
};

/// W = A A' of the unfolded affinity tensor, with its degree vector.
struct WeightMatrix {
    Matrix entries;   // N x N, symmetric nonnegative
    Vector degrees;   // row sums
    bool has_zero_degree = false;

    int size() const { return static_cast<int>(entries.rows()); }
};

struct WeightOptions {
    int workers = 1;
    std::size_t memory_cap_bytes = std::size_t(1) << 30;
};

namespace detail {

// Value of the tensor on a set of distinct indices (order irrelevant: the
// polar curvature is symmetric and the perfect value depends only on
// cluster membership).
inline double tuple_affinity(const TensorSpec& spec, const Matrix& points,
                             const int* idx, int m, Matrix& buffer) {
    if (spec.variant == TensorVariant::perfect) {
        const int c0 = spec.ground_truth[idx[0]];
        for (int t = 1; t < m; ++t)
            if (spec.ground_truth[idx[t]] != c0) return 0.0;
        return 1.0;
    }
    for (int t = 0; t < m; ++t) buffer.row(t) = points.row(idx[t]);
    double c = 0.0;
    switch (spec.variant) {
        case TensorVariant::polar_affine:
            c = detail::polar_curvature(buffer);
            break;
        case TensorVariant::polar_linear:
            c = detail::polar_curvature_with_origin(buffer);
            break;
        case TensorVariant::polar_power:
            c = std::pow(detail::polar_curvature(buffer), spec.q);
            break;
        default:
            break;
    }
    return std::exp(-c / spec.sigma);
}

}  // namespace detail

/// One entry of the affinity tensor.  Indices with repeats give 0.
inline double affinity_value(const TensorSpec& spec, const Matrix& points,
                             const std::vector<int>& indices) {
    spec.validate();
    const int m = spec.tuple_size();
    if (static_cast<int>(indices.size()) != m)
        throw validation_error("affinity_value: expected " +
                               std::to_string(m) + " indices");
    const int n = static_cast<int>(points.rows());
    for (int i : indices)
        if (i < 0 || i >= n)
            throw validation_error("affinity_value: index out of range");
    for (std::size_t a = 0; a < indices.size(); ++a)
        for (std::size_t b = a + 1; b < indices.size(); ++b)
            if (indices[a] == indices[b]) return 0.0;
    Matrix buffer(m, points.cols());
    return detail::tuple_affinity(spec, points, indices.data(), m, buffer);
}

namespace detail {

struct KahanMatrix {
    explicit KahanMatrix(int n) : n(n), cells(std::size_t(n) * n) {}
    void add(int i, int j, double x) { cells[std::size_t(i) * n + j].add(x); }
    double value(int i, int j) const {
        return cells[std::size_t(i) * n + j].value();
    }
    void merge(const KahanMatrix& other) {
        // other's compensated total is sum - carry
        for (std::size_t k = 0; k < cells.size(); ++k) {
            cells[k].add(other.cells[k].sum);
            cells[k].add(-other.cells[k].carry);
        }
    }
    int n;
    std::vector<KahanSum> cells;
};

// Accumulate the rank-one updates of every column whose (m-1)-subset rank
// lies in [first, last) into `acc`.  `table` holds the affinity of each
// unordered m-subset in colexicographic rank order (empty => recompute).
inline void accumulate_columns(const TensorSpec& spec, const Matrix& points,
                               std::uint64_t first, std::uint64_t last,
                               const std::vector<double>& table,
                               const BinomialTable& binom, KahanMatrix& acc) {
    const int n = static_cast<int>(points.rows());
    const int m = spec.tuple_size();
    const int r = m - 1;
    const double mult = static_cast<double>(factorial(r));

    Matrix buffer(m, points.cols());
    std::vector<int> comb = first_combination(r);
    // jump to the first combination of rank `first`
    if (first > 0) {
        std::uint64_t rem = first;
        for (int j = r - 1; j >= 0; --j) {
            int c = j;  // minimal possible value
            while (binom.choose(c + 1, j + 1) <= rem) ++c;
            comb[j] = c;
            rem -= binom.choose(c, j + 1);
        }
    }

    std::vector<double> column(n);
    std::vector<int> tuple(m);
    std::vector<int> nonzero;
    nonzero.reserve(n);
    for (std::uint64_t rank = first; rank < last; ++rank) {
        column.assign(n, 0.0);
        nonzero.clear();
        for (int i = 0; i < n; ++i) {
            bool in_s = false;
            for (int j = 0; j < r; ++j)
                if (comb[j] == i) { in_s = true; break; }
            if (in_s) continue;
            double v;
            if (!table.empty()) {
                // sorted insert of i into comb, then colex rank lookup
                int pos = 0;
                while (pos < r && comb[pos] < i) { tuple[pos] = comb[pos]; ++pos; }
                tuple[pos] = i;
                for (int j = pos; j < r; ++j) tuple[j + 1] = comb[j];
                v = table[combination_rank(tuple, binom)];
            } else {
                for (int j = 0; j < r; ++j) tuple[j] = comb[j];
                tuple[r] = i;
                v = tuple_affinity(spec, points, tuple.data(), m, buffer);
            }
            if (v != 0.0) {
                column[i] = v;
                nonzero.push_back(i);
            }
        }
        for (std::size_t a = 0; a < nonzero.size(); ++a) {
            const int i = nonzero[a];
            const double vi = mult * column[i];
            for (std::size_t b = a; b < nonzero.size(); ++b) {
                const int j = nonzero[b];
                acc.add(i, j, vi * column[j]);
            }
        }
        if (rank + 1 < last && !next_combination(comb, n))
            throw numeric_error("weight_matrix: combination stream exhausted");
    }
}

}  // namespace detail

/// Exact W = A A' of the unfolded tensor, formed by streaming over the
/// column tuples and accumulating rank-one updates.  The tensor itself is
/// never materialized; each curvature is evaluated once per unordered tuple.
inline WeightMatrix weight_matrix(const TensorSpec& spec, const Matrix& points,
                                  const WeightOptions& opts = {}) {
    spec.validate();
    const int n = static_cast<int>(points.rows());
    const int m = spec.tuple_size();
    const int r = m - 1;
    if (n < m)
        throw validation_error("weight_matrix: need at least " +
                               std::to_string(m) + " points");
    if (spec.variant == TensorVariant::perfect &&
        static_cast<int>(spec.ground_truth.size()) != n)
        throw validation_error("weight_matrix: ground truth size mismatch");

    const int workers = std::max(1, opts.workers);
    BinomialTable binom(n, m);
    const std::uint64_t n_subsets = binom.choose(n, m);
    const std::uint64_t n_columns = binom.choose(n, r);

    const bool want_table = spec.variant != TensorVariant::perfect;
    const std::size_t bytes_table = want_table ? n_subsets * sizeof(double) : 0;
    const std::size_t bytes_acc =
        std::size_t(workers) * n * n * sizeof(KahanSum);
    if (bytes_table + bytes_acc + std::size_t(n) * n * sizeof(double) >
        opts.memory_cap_bytes)
        throw validation_error("weight_matrix: memory estimate exceeds cap");

    // Affinities of all unordered m-subsets, in colex rank order.
    std::vector<double> table;
    if (want_table) {
        table.resize(n_subsets);
        Matrix buffer(m, points.cols());
        std::vector<int> comb = first_combination(m);
        std::uint64_t rank = 0;
        do {
            table[rank++] =
                detail::tuple_affinity(spec, points, comb.data(), m, buffer);
        } while (next_combination(comb, n));
    }

    // Column streaming, partitioned into per-worker chunks that are reduced
    // in fixed order so the result is deterministic for a fixed chunking.
    std::vector<detail::KahanMatrix> partials;
    partials.reserve(workers);
    for (int w = 0; w < workers; ++w) partials.emplace_back(n);

    if (workers == 1) {
        detail::accumulate_columns(spec, points, 0, n_columns, table, binom,
                                   partials[0]);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (n_columns + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::uint64_t lo = std::min<std::uint64_t>(w * chunk, n_columns);
            const std::uint64_t hi =
                std::min<std::uint64_t>(lo + chunk, n_columns);
            pool.emplace_back([&, w, lo, hi] {
                detail::accumulate_columns(spec, points, lo, hi, table, binom,
                                           partials[w]);
            });
        }
        for (auto& t : pool) t.join();
        for (int w = 1; w < workers; ++w) partials[0].merge(partials[w]);
    }

    WeightMatrix out;
    out.entries = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = partials[0].value(i, j);
            out.entries(i, j) = v;
            out.entries(j, i) = v;
        }
    out.degrees = Vector(n);
    for (int i = 0; i < n; ++i) {
        KahanSum row;
        for (int j = 0; j < n; ++j) row.add(out.entries(i, j));
        out.degrees(i) = row.value();
        if (!(row.value() > 0.0)) out.has_zero_degree = true;
    }
    return out;
}

/// Closed-form W for the perfect tensor: block diagonal with diagonal
/// perm(N_k-1, d+1) and off-diagonal perm(N_k-2, d+1) inside block k.
inline WeightMatrix perfect_weight_matrix(const std::vector<int>& cluster_sizes,
                                          int d) {
    if (d < 0) throw validation_error("perfect_weight_matrix: d must be >= 0");
    int n = 0;
    for (int nk : cluster_sizes) {
        if (nk < d + 2)
            throw validation_error(
                "perfect_weight_matrix: every cluster needs >= d+2 points");
        n += nk;
    }
    WeightMatrix out;
    out.entries = Matrix::Zero(n, n);
    out.degrees = Vector(n);
    int off = 0;
    for (int nk : cluster_sizes) {
        const double diag = static_cast<double>(perm(nk - 1, d + 1));
        const double offd = static_cast<double>(perm(nk - 2, d + 1));
        const double deg = (nk - d - 1) * diag;
        for (int i = 0; i < nk; ++i) {
            for (int j = 0; j < nk; ++j)
                out.entries(off + i, off + j) = (i == j) ? diag : offd;
            out.degrees(off + i) = deg;
        }
        off += nk;
    }
    out.has_zero_degree = false;
    return out;
}

/// Perfect degrees per cluster: d~_k = (N_k-d-1) perm(N_k-1, d+1).
inline double perfect_degree(int cluster_size, int d) {
    if (cluster_size < d + 2)
        throw validation_error("perfect_degree: cluster needs >= d+2 points");
    return (cluster_size - d - 1) *
           static_cast<double>(perm(cluster_size - 1, d + 1));
}

/// Frobenius deviation of the affinity tensor from the perfect tensor.
struct Deviation {
    double frobenius = 0.0;      // ||E||_F
    double normalized_sq = 0.0;  // N^{-m} ||E||_F^2 (m = tensor order)
};

/// Debug dump of W and its degrees: a comment header carrying N, d, the
/// variant and sigma, the N rows of W, then one final "degrees,..." line.
inline void write_weight_csv(std::ostream& os, const WeightMatrix& w, int d,
                             TensorVariant variant, double sigma) {
    os << "# N=" << w.size() << " d=" << d << " variant=" << variant_name(variant)
       << " sigma=" << sigma << "\n";
    char buf[64];
    for (int i = 0; i < w.size(); ++i) {
        for (int j = 0; j < w.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", w.entries(i, j));
            os << (j ? "," : "") << buf;
        }
        os << "\n";
    }
    os << "degrees";
    for (int i = 0; i < w.size(); ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g", w.degrees(i));
        os << buf;
    }
    os << "\n";
}

inline void write_weight_csv(const std::string& path, const WeightMatrix& w,
                             int d, TensorVariant variant, double sigma) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    write_weight_csv(os, w, d, variant, sigma);
    if (!os) throw io_error("write failed: " + path);
}

inline Deviation deviation_norm(const TensorSpec& spec, const Matrix& points,
                                const std::vector<int>& ground_truth) {
    spec.validate();
    const int n = static_cast<int>(points.rows());
    const int m = spec.tuple_size();
    if (static_cast<int>(ground_truth.size()) != n)
        throw validation_error("deviation_norm: ground truth size mismatch");
    if (n < m) throw validation_error("deviation_norm: too few points");

    // Only tuples of distinct indices contribute; each unordered tuple
    // stands for m! ordered ones.
    KahanSum total;
    Matrix buffer(m, points.cols());
    std::vector<int> comb = first_combination(m);
    const double mult = static_cast<double>(factorial(m));
    do {
        const double a =
            detail::tuple_affinity(spec, points, comb.data(), m, buffer);
        const int c0 = ground_truth[comb[0]];
        bool same = true;
        for (int j = 1; j < m; ++j)
            if (ground_truth[comb[j]] != c0) { same = false; break; }
        const double e = a - (same ? 1.0 : 0.0);
        total.add(mult * e * e);
    } while (next_combination(comb, n));

    Deviation dev;
    const double sq = std::max(total.value(), 0.0);
    dev.frobenius = std::sqrt(sq);
    dev.normalized_sq = sq / std::pow(static_cast<double>(n), m);
    return dev;
}

}  // namespace tscc
