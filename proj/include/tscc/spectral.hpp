#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tscc/affinity.hpp"
#include "tscc/common.hpp"
#include "tscc/modelgen.hpp"
#include "tscc/partition.hpp"

namespace tscc {

/// Z = D^{-1/2} W D^{-1/2}.  Refuses isolated points (zero degrees).
inline Matrix normalize_symmetric(const WeightMatrix& w) {
    const int n = w.size();
    if (w.has_zero_degree)
        throw numeric_error("normalize_symmetric: isolated point (zero degree)");
    Vector inv_sqrt(n);
    for (int i = 0; i < n; ++i) {
        if (!(w.degrees(i) > 0.0))
            throw numeric_error(
                "normalize_symmetric: isolated point (zero degree)");
        inv_sqrt(i) = 1.0 / std::sqrt(w.degrees(i));
    }
    Matrix z = inv_sqrt.asDiagonal() * w.entries * inv_sqrt.asDiagonal();
    z = 0.5 * (z + z.transpose());  // kill roundoff asymmetry
    return z;
}

enum class EmbeddingMode { normalized, unnormalized };

/// Top-K eigenvectors of Z plus the full spectrum, descending.
struct Embedding {
    Matrix U;            // N x K, orthonormal columns
    Vector eigenvalues;  // all N, descending
    EmbeddingMode mode = EmbeddingMode::normalized;
    bool eigengap_collapse = false;  // |lambda_K - lambda_{K+1}| < 1e-8
};

inline Embedding spectral_embedding(const Matrix& z, int k,
                                    EmbeddingMode mode = EmbeddingMode::normalized) {
    const int n = static_cast<int>(z.rows());
    if (z.cols() != n) throw validation_error("spectral_embedding: not square");
    if (k < 1 || k > n)
        throw validation_error("spectral_embedding: need 1 <= K <= N");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (z + z.transpose()));
    if (es.info() != Eigen::Success)
        throw numeric_error("spectral_embedding: eigensolver failed");

    Embedding emb;
    emb.mode = mode;
    emb.eigenvalues = Vector(n);
    for (int i = 0; i < n; ++i) emb.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
    emb.U = Matrix(n, k);
    for (int j = 0; j < k; ++j) emb.U.col(j) = es.eigenvectors().col(n - 1 - j);
    if (k < n &&
        std::abs(emb.eigenvalues(k - 1) - emb.eigenvalues(k)) < 1e-8)
        emb.eigengap_collapse = true;
    return emb;
}

/// T normalization: row i scaled by sqrt(N_k) of its cluster.
inline Matrix row_normalize_T(const Matrix& u, const Partition& partition) {
    if (partition.total() != u.rows())
        throw validation_error("row_normalize_T: partition size mismatch");
    Matrix t = u;
    for (const auto& block : partition.index_sets) {
        const double s = std::sqrt(static_cast<double>(block.size()));
        for (int i : block) t.row(i) *= s;
    }
    return t;
}

/// V normalization: rows scaled to unit length.
inline Matrix row_normalize_V(const Matrix& u) {
    Matrix v = u;
    std::vector<int> zero_rows;
    for (int i = 0; i < u.rows(); ++i) {
        const double norm = u.row(i).norm();
        if (norm < 1e-300)
            zero_rows.push_back(i);
        else
            v.row(i) /= norm;
    }
    if (!zero_rows.empty()) {
        std::string msg = "row_normalize_V: zero rows at";
        for (int i : zero_rows) msg += " " + std::to_string(i);
        throw numeric_error(msg);
    }
    return v;
}

/// K-means output.  Labels are 0-based cluster ids.
struct ClusteringResult {
    std::vector<int> labels;
    Matrix centers;  // K x dim
    double inertia = 0.0;
    int restarts_used = 0;
};

namespace detail {

struct LloydOutcome {
    std::vector<int> labels;
    Matrix centers;
    double inertia = std::numeric_limits<double>::infinity();
    bool empty_cluster = false;
};

inline LloydOutcome lloyd_once(const Matrix& rows, int k, RandomStream& rng,
                               int max_iter, double tol) {
    const int n = static_cast<int>(rows.rows());
    const int dim = static_cast<int>(rows.cols());

    // k-means++ style seeding
    Matrix centers(k, dim);
    std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
    centers.row(0) = rows.row(static_cast<int>(rng.uniform_index(n)));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d2 = (rows.row(i) - centers.row(c - 1)).squaredNorm();
            min_sq[i] = std::min(min_sq[i], d2);
            total += min_sq[i];
        }
        int pick = n - 1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += min_sq[i];
                if (acc >= target) { pick = i; break; }
            }
        } else {
            pick = static_cast<int>(rng.uniform_index(n));
        }
        centers.row(c) = rows.row(pick);
    }

    LloydOutcome out;
    out.labels.assign(n, 0);
    std::vector<int> counts(k);
    Matrix sums(k, dim);
    for (int iter = 0; iter < max_iter; ++iter) {
        sums.setZero();
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (rows.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d2 = (rows.row(i) - centers.row(c)).squaredNorm();
                if (d2 < best_d) { best_d = d2; best = c; }
            }
            out.labels[i] = best;
            sums.row(best) += rows.row(i);
            ++counts[best];
        }
        double moved = 0.0;
        bool empty = false;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) { empty = true; continue; }
            const Eigen::RowVectorXd nc = sums.row(c) / counts[c];
            moved = std::max(moved, (nc - centers.row(c)).norm());
            centers.row(c) = nc;
        }
        if (empty) {
            out.empty_cluster = true;
            return out;
        }
        if (moved < tol) break;
    }
    out.centers = centers;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
        inertia += (rows.row(i) - centers.row(out.labels[i])).squaredNorm();
    out.inertia = inertia;
    return out;
}

}  // namespace detail

/// Best-of-restarts K-means with k-means++ seeding.  Deterministic for a
/// fixed seed.  A restart that converges onto an empty cluster is re-seeded
/// a bounded number of times.
inline ClusteringResult kmeans_cluster(const Matrix& rows, int k, int restarts,
                                       std::uint64_t seed, int max_iter = 300,
                                       double tol = 1e-9) {
    const int n = static_cast<int>(rows.rows());
    if (k < 1) throw validation_error("kmeans_cluster: need K >= 1");
    if (n < k) throw validation_error("kmeans_cluster: need N >= K");
    if (restarts < 1) throw validation_error("kmeans_cluster: need restarts >= 1");

    RandomStream root = RandomStream::seeded(seed);
    ClusteringResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int r = 0; r < restarts; ++r) {
        detail::LloydOutcome out;
        bool ok = false;
        for (int attempt = 0; attempt < 6; ++attempt) {
            RandomStream rng = root.spawn(std::uint64_t(r) * 131 + attempt);
            out = detail::lloyd_once(rows, k, rng, max_iter, tol);
            if (!out.empty_cluster) { ok = true; break; }
        }
        if (!ok)
            throw numeric_error(
                "kmeans_cluster: empty cluster persisted across re-seeds");
        ++used;
        if (out.inertia < best.inertia) {
            best.labels = out.labels;
            best.centers = out.centers;
            best.inertia = out.inertia;
        }
    }
    best.restarts_used = used;
    return best;
}

enum class RowNorm { none, T, V };

/// Options for the full pipeline.
struct TsccOptions {
    TensorVariant variant = TensorVariant::polar_affine;
    double q = 2.0;             // exponent when variant == polar_power
    RowNorm row_norm = RowNorm::none;
    bool unnormalized = false;  // TSCC-UN: skip degree normalization
    int restarts = 20;
    std::uint64_t seed = 1;
    WeightOptions weight;
};

/// Everything the pipeline produced, for diagnostics.
struct TsccResult {
    WeightMatrix weight;
    Matrix z;  // normalized weight matrix (or W itself in unnormalized mode)
    Embedding embedding;
    Matrix rows;  // what K-means actually clustered (U, T or V rows)
    ClusteringResult clustering;
};

/// Steps 1-6: affinity tensor -> W -> Z -> U -> optional row normalization
/// -> K-means.
inline TsccResult run_tscc(const Dataset& data, int d, int k, double sigma,
                           const TsccOptions& opts = {}) {
    if (k < 1) throw validation_error("run_tscc: need K >= 1");
    TensorSpec spec;
    spec.variant = opts.variant;
    spec.sigma = sigma;
    spec.q = opts.q;
    spec.d = d;
    if (opts.variant == TensorVariant::perfect) {
        if (!data.truth)
            throw validation_error("run_tscc: perfect variant needs ground truth");
        spec.ground_truth = data.truth->to_labels();
    }
    spec.validate();

    TsccResult res;
    res.weight = weight_matrix(spec, data.points, opts.weight);
    res.z = opts.unnormalized ? res.weight.entries
                              : normalize_symmetric(res.weight);
    res.embedding = spectral_embedding(res.z, k,
                                       opts.unnormalized
                                           ? EmbeddingMode::unnormalized
                                           : EmbeddingMode::normalized);

    switch (opts.row_norm) {
        case RowNorm::none:
            res.rows = res.embedding.U;
            break;
        case RowNorm::V:
            res.rows = row_normalize_V(res.embedding.U);
            break;
        case RowNorm::T: {
            // cluster sizes from ground truth when available, otherwise from
            // a preliminary clustering of the raw embedding
            Partition part;
            if (data.truth) {
                part = *data.truth;
            } else {
                const ClusteringResult pre = kmeans_cluster(
                    res.embedding.U, k, opts.restarts, opts.seed ^ 0x9E37u);
                part = Partition::from_labels(pre.labels, k);
            }
            res.rows = row_normalize_T(res.embedding.U, part);
            break;
        }
    }

    res.clustering = kmeans_cluster(res.rows, k, opts.restarts, opts.seed);
    return res;
}

}  // namespace tscc
