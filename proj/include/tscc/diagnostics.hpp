#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tscc/affinity.hpp"
#include "tscc/common.hpp"
#include "tscc/partition.hpp"

namespace tscc {

/// Cluster means of the rows under the given partition.
inline Matrix cluster_centers(const Matrix& rows, const Partition& partition) {
    if (partition.total() != rows.rows())
        throw validation_error("cluster_centers: partition size mismatch");
    Matrix centers = Matrix::Zero(partition.blocks(), rows.cols());
    for (int k = 0; k < partition.blocks(); ++k) {
        const auto& block = partition.index_sets[k];
        if (block.empty())
            throw validation_error("cluster_centers: empty index set");
        for (int i : block) centers.row(k) += rows.row(i);
        centers.row(k) /= static_cast<double>(block.size());
    }
    return centers;
}

/// Total variation: sum of within-cluster variances of the embedding rows.
inline double total_variation(const Matrix& u, const Partition& partition) {
    const Matrix centers = cluster_centers(u, partition);
    double tv = 0.0;
    for (int k = 0; k < partition.blocks(); ++k)
        for (int i : partition.index_sets[k])
            tv += (u.row(i) - centers.row(k)).squaredNorm();
    return tv;
}

/// Frobenius distance between the orthogonal projectors onto the two column
/// spans: ||Ua Ua' - Ub Ub'||_F = sqrt(2K - 2 ||Ua' Ub||_F^2).
inline double subspace_distance(const Matrix& ua, const Matrix& ub) {
    if (ua.rows() != ub.rows() || ua.cols() != ub.cols())
        throw validation_error("subspace_distance: shape mismatch");
    const int k = static_cast<int>(ua.cols());
    const double cross = (ua.transpose() * ub).squaredNorm();
    return std::sqrt(std::max(0.0, 2.0 * k - 2.0 * cross));
}

/// Principal angles between the column spans, ascending, in [0, pi/2].
inline Vector principal_angles(const Matrix& ua, const Matrix& ub) {
    if (ua.rows() != ub.rows() || ua.cols() != ub.cols())
        throw validation_error("principal_angles: shape mismatch");
    Eigen::JacobiSVD<Matrix> svd(ua.transpose() * ub);
    Vector angles(svd.singularValues().size());
    for (int i = 0; i < angles.size(); ++i) {
        const double c = std::clamp(svd.singularValues()(i), 0.0, 1.0);
        angles(i) = std::acos(c);  // singular values descending -> ascending angles
    }
    return angles;
}

/// Separation factor beta: cross-center inner products over the squared
/// total center mass.  Small beta means nearly orthogonal centers.
inline double separation_factor(const Matrix& rows, const Partition& partition) {
    const Matrix centers = cluster_centers(rows, partition);
    const int k = centers.rows();
    double denom = 0.0;
    for (int a = 0; a < k; ++a) denom += centers.row(a).squaredNorm();
    if (!(denom > 0.0))
        throw numeric_error("separation_factor: all centers are zero");
    double num = 0.0;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            const double ip = centers.row(a).dot(centers.row(b));
            num += ip * ip;
        }
    return num / (denom * denom);
}

/// Clustering identification error for K = 2: the fraction of rows at least
/// half the center distance away from their own center.
inline double identification_error(const Matrix& rows, const Partition& partition) {
    if (partition.blocks() != 2)
        throw validation_error("identification_error: only K = 2 is supported");
    const Matrix centers = cluster_centers(rows, partition);
    const double half_gap = 0.5 * (centers.row(0) - centers.row(1)).norm();
    int bad = 0;
    for (int k = 0; k < 2; ++k)
        for (int i : partition.index_sets[k])
            if ((rows.row(i) - centers.row(k)).norm() >= half_gap) ++bad;
    return static_cast<double>(bad) / partition.total();
}

/// The ideal embedding of a partition: row i has 1/sqrt(N_k) in column k.
inline Matrix perfect_embedding(const Partition& partition) {
    const int n = partition.total();
    Matrix u = Matrix::Zero(n, partition.blocks());
    for (int k = 0; k < partition.blocks(); ++k) {
        const double v = 1.0 / std::sqrt(double(partition.index_sets[k].size()));
        for (int i : partition.index_sets[k]) u(i, k) = v;
    }
    return u;
}

enum class SpectrumMode { normalized, unnormalized };

/// Closed-form spectrum of the perfect weight matrix.
struct PerfectSpectrum {
    Vector eigenvalues;  // all N, descending
    double eigengap = 0.0;
    std::vector<double> top_values;   // per cluster: 1 (normalized) or d~_k
    std::vector<double> bulk_values;  // per cluster, multiplicity N_k - 1
};

inline PerfectSpectrum perfect_spectrum(const std::vector<int>& sizes, int d,
                                        SpectrumMode mode) {
    if (sizes.empty()) throw validation_error("perfect_spectrum: no clusters");
    PerfectSpectrum out;
    std::vector<double> all;
    for (int nk : sizes) {
        if (mode == SpectrumMode::normalized ? (nk <= d + 2) : (nk < d + 2))
            throw validation_error("perfect_spectrum: cluster size too small");
        double top, bulk;
        if (mode == SpectrumMode::normalized) {
            top = 1.0;
            bulk = double(d + 1) / (double(nk - 1) * double(nk - d - 1));
        } else {
            top = perfect_degree(nk, d);
            bulk = double(d + 1) * double(perm(nk - 2, d));
        }
        out.top_values.push_back(top);
        out.bulk_values.push_back(bulk);
        all.push_back(top);
        all.insert(all.end(), nk - 1, bulk);
    }
    std::sort(all.begin(), all.end(), std::greater<>());
    out.eigenvalues = Eigen::Map<const Vector>(all.data(), all.size());
    const int k = static_cast<int>(sizes.size());
    out.eigengap = out.eigenvalues(k - 1) - out.eigenvalues(k);
    return out;
}

/// Constants of the perturbation theorems.
struct BoundConstants {
    double epsilon1 = std::numeric_limits<double>::quiet_NaN();
    bool epsilon1_valid = false;  // requires min_k N_k >= 2d+3
    double epsilon2 = std::numeric_limits<double>::quiet_NaN();
    double C0 = std::numeric_limits<double>::quiet_NaN();
    double C1 = std::numeric_limits<double>::quiet_NaN();
    double C2 = std::numeric_limits<double>::quiet_NaN();
    double delta_K = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> alpha;  // filled by the incidence module when used
};

/// epsilon_1 from the size-comparability condition, epsilon_2 from the
/// degree ratios, and the compound constants C0, C1 (normalized TSCC) and
/// C2 (TSCC-UN).
inline BoundConstants bound_constants(int k, int d,
                                      const std::vector<int>& sizes,
                                      const Vector& degrees,
                                      const Vector& perfect_degrees) {
    if (static_cast<int>(sizes.size()) != k)
        throw validation_error("bound_constants: size list does not match K");
    if (degrees.size() != perfect_degrees.size())
        throw validation_error("bound_constants: degree vectors differ in size");
    int n = 0, n_min = std::numeric_limits<int>::max();
    for (int nk : sizes) {
        n += nk;
        n_min = std::min(n_min, nk);
    }
    BoundConstants out;
    if (n_min >= 2 * d + 3) {
        out.epsilon1 = std::min(1.0, double(k) * n_min / double(n));
        out.epsilon1_valid = true;
    }
    double eps2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < degrees.size(); ++i) {
        if (!(degrees(i) > 0.0) || !(perfect_degrees(i) > 0.0))
            throw validation_error("bound_constants: degrees must be positive");
        eps2 = std::min(eps2, degrees(i) / perfect_degrees(i));
    }
    out.epsilon2 = eps2;
    out.delta_K = 1.0 - double(d + 1) / (double(n_min - 1) * double(n_min - d - 1));
    if (out.epsilon1_valid) {
        const double ratio = 2.0 * k / out.epsilon1;
        out.C0 = 16.0 / eps2 * std::pow(ratio, 2 * d + 5) +
                 8.0 * std::sqrt(2.0 * k) / std::sqrt(eps2) *
                     std::pow(ratio, d + 2.5);
        out.C1 = 32.0 / 9.0 * out.C0 * out.C0;
        out.C2 = 32.0 * std::pow(ratio, 2.0 * (d + 2));
    }
    return out;
}

/// One run's worth of inputs for the perturbation-theorem check.
struct PerturbationRun {
    double normalized_deviation_sq = 0.0;  // N^{-(d+2)} ||E||_F^2
    double tv = 0.0;
    bool unnormalized = false;
    int n = 0;
    int k = 0;
    int d = 0;
};

struct PerturbationCheck {
    double x = 0.0;          // N^{-(d+2)} ||E||_F^2
    double tv = 0.0;
    double constant = 0.0;   // C1 (or C2 in unnormalized mode)
    double threshold = 0.0;  // 1 / (8 C)
    double bound_value = 0.0;
    bool size_condition_met = true;  // unnormalized mode needs N large enough
    bool hypothesis_met = false;
    bool bound_holds = false;  // only meaningful when hypothesis_met
};

/// Checks TV <= C * x whenever the theorem's hypothesis holds; runs that
/// fail the hypothesis are reported without asserting anything.
inline PerturbationCheck check_perturbation_bound(const PerturbationRun& run,
                                                  const BoundConstants& c) {
    PerturbationCheck out;
    out.x = run.normalized_deviation_sq;
    out.tv = run.tv;
    out.constant = run.unnormalized ? c.C2 : c.C1;
    if (!c.epsilon1_valid || !(out.constant > 0.0)) {
        out.hypothesis_met = false;
        return out;
    }
    if (run.unnormalized) {
        const double n_min =
            std::sqrt(2.0 * (run.d + 1) *
                      std::pow(1.0 - double(run.k - 1) / run.k * c.epsilon1,
                               run.d) *
                      std::pow(2.0 * run.k / c.epsilon1, run.d + 2));
        out.size_condition_met = run.n >= n_min;
    }
    out.threshold = 1.0 / (8.0 * out.constant);
    out.bound_value = out.constant * out.x;
    out.hypothesis_met = out.size_condition_met && out.x <= out.threshold;
    out.bound_holds = out.tv <= out.bound_value;
    return out;
}

inline std::vector<PerturbationCheck> verify_perturbation_bound(
    const std::vector<PerturbationRun>& runs, const BoundConstants& c) {
    std::vector<PerturbationCheck> out;
    out.reserve(runs.size());
    for (const auto& r : runs) out.push_back(check_perturbation_bound(r, c));
    return out;
}

/// Minimal misclassification over all bijections of predicted to true labels.
struct Misclassification {
    int count = 0;
    double fraction = 0.0;
    std::vector<int> permutation;  // permutation[predicted] = true label
};

inline Misclassification misclassification(const std::vector<int>& predicted,
                                           const std::vector<int>& truth,
                                           int k) {
    if (predicted.size() != truth.size())
        throw validation_error("misclassification: label vectors differ");
    if (k < 1 || k > 8)
        throw validation_error(
            "misclassification: exhaustive alignment supports 1 <= K <= 8");
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    Misclassification best;
    best.count = static_cast<int>(predicted.size()) + 1;
    do {
        int bad = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            const int p = predicted[i];
            if (p < 0 || p >= k)
                throw validation_error("misclassification: label out of range");
            if (perm[p] != truth[i]) ++bad;
        }
        if (bad < best.count) {
            best.count = bad;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    best.fraction = predicted.empty()
                        ? 0.0
                        : static_cast<double>(best.count) / predicted.size();
    return best;
}

}  // namespace tscc
