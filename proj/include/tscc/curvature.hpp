#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tscc/common.hpp"

namespace tscc {

/// Which curvature to evaluate on a (d+2)-tuple.
enum class CurvatureKind { polar, dls, h };

/// An ordered tuple of points in R^D, one per row.  Holds d+2 points for the
/// affine kernels or d+1 for the linear (through-the-origin) variant.
struct PointTuple {
    Matrix points;      // m x D, row per point
    int intrinsic_dim;  // d

    PointTuple(Matrix pts, int d) : points(std::move(pts)), intrinsic_dim(d) {
        const int m = static_cast<int>(points.rows());
        const int D = static_cast<int>(points.cols());
        if (d < 0 || d >= D)
            throw validation_error("PointTuple: need 0 <= d < ambient dim");
        if (m != d + 1 && m != d + 2)
            throw validation_error("PointTuple: need d+1 or d+2 points");
    }

    int ambient_dim() const { return static_cast<int>(points.cols()); }
    int size() const { return static_cast<int>(points.rows()); }
};

namespace detail {

inline double distinctness_tolerance(const Eigen::Ref<const Matrix>& pts) {
    const double mx = pts.size() ? pts.cwiseAbs().maxCoeff() : 0.0;
    return 1e-12 * (1.0 + mx);
}

// Pairwise Euclidean distances; throws if two rows coincide (within the
// relative tolerance of the distinctness contract).
inline Matrix pairwise_distances_checked(const Eigen::Ref<const Matrix>& pts) {
    const int m = static_cast<int>(pts.rows());
    const double tol = distinctness_tolerance(pts);
    Matrix dist = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double dij = (pts.row(i) - pts.row(j)).norm();
            if (dij < tol)
                throw degenerate_tuple_error(
                    "degenerate tuple: repeated point");
            dist(i, j) = dist(j, i) = dij;
        }
    return dist;
}

// sqrt(det G) of the Gram matrix of edge vectors from vertex 0.  Equals
// (m-1)! times the (m-1)-volume of the simplex.  Evaluated as |prod R_ii|
// of a Householder QR of the edge matrix, which is the same quantity
// (G = R'R) but keeps full relative accuracy on nearly co-flat tuples
// where forming the determinant of G itself cancels catastrophically.
inline double simplex_gram_root(const Eigen::Ref<const Matrix>& pts) {
    const int m = static_cast<int>(pts.rows());
    if (m < 2) throw validation_error("simplex: need at least 2 points");
    Matrix edges(pts.cols(), m - 1);
    for (int j = 1; j < m; ++j)
        edges.col(j - 1) = (pts.row(j) - pts.row(0)).transpose();
    if (m - 1 > pts.cols()) return 0.0;  // more edges than dimensions
    Eigen::HouseholderQR<Matrix> qr(edges);
    double root = 1.0;
    for (int j = 0; j < m - 1; ++j) root *= std::abs(qr.matrixQR()(j, j));
    return root;
}

// Polar curvature of the rows of `pts` treated as a (d+2)-tuple, d = m-2.
inline double polar_curvature(const Eigen::Ref<const Matrix>& pts) {
    const int m = static_cast<int>(pts.rows());
    const Matrix dist = pairwise_distances_checked(pts);
    const double root = simplex_gram_root(pts);  // (d+1)! * V_{d+1}
    const double diam = dist.maxCoeff();

    double sum_sq = 0.0;
    for (int i = 0; i < m; ++i) {
        double denom = 1.0;
        for (int j = 0; j < m; ++j)
            if (j != i) denom *= dist(i, j);
        const double psin = std::clamp(root / denom, 0.0, 1.0);
        sum_sq += psin * psin;
    }
    return diam * std::sqrt(sum_sq);
}

// Same, with the origin prepended (linear-subspace variant).
inline double polar_curvature_with_origin(const Eigen::Ref<const Matrix>& pts) {
    Matrix full(pts.rows() + 1, pts.cols());
    full.row(0).setZero();
    full.bottomRows(pts.rows()) = pts;
    return polar_curvature(full);
}

}  // namespace detail

/// (m-1)-volume of the simplex with the tuple's points as vertices.
inline double simplex_volume(const PointTuple& tuple) {
    const int m = tuple.size();
    const double root = detail::simplex_gram_root(tuple.points);
    return root / static_cast<double>(factorial(m - 1));
}

/// Polar sine at the given vertex (0-based) of a (d+2)-tuple.  Lies in [0, 1].
inline double polar_sine(const PointTuple& tuple, int vertex) {
    const int m = tuple.size();
    if (m != tuple.intrinsic_dim + 2)
        throw validation_error("polar_sine: tuple must hold d+2 points");
    if (vertex < 0 || vertex >= m)
        throw validation_error("polar_sine: vertex index out of range");
    const Matrix dist = detail::pairwise_distances_checked(tuple.points);
    const double root = detail::simplex_gram_root(tuple.points);
    double denom = 1.0;
    for (int j = 0; j < m; ++j)
        if (j != vertex) denom *= dist(vertex, j);
    return std::clamp(root / denom, 0.0, 1.0);
}

/// Polar curvature of a (d+2)-tuple: diameter times the root-sum-square of
/// the polar sines.  Zero exactly when the points lie on a common d-flat.
/// For d = 0 both polar sines are 1, so the value is sqrt(2) times the
/// distance between the two points.
inline double polar_curvature(const PointTuple& tuple) {
    if (tuple.size() != tuple.intrinsic_dim + 2)
        throw validation_error("polar_curvature: tuple must hold d+2 points");
    return detail::polar_curvature(tuple.points);
}

/// Polar curvature of (0, z_1, ..., z_{d+1}) for the linear-subspace variant.
/// The tuple holds the d+1 nonzero points; the origin is prepended here.
inline double polar_curvature_linear(const PointTuple& tuple) {
    if (tuple.size() != tuple.intrinsic_dim + 1)
        throw validation_error(
            "polar_curvature_linear: tuple must hold d+1 points");
    return detail::polar_curvature_with_origin(tuple.points);
}

namespace detail {

// Total-least-squares curvature: sqrt of the minimal sum of squared
// distances from the m points to any d-flat.  The singular values of the
// centered m x D tuple carry the scatter spectrum of the tuple's own span,
// so the cost does not grow with D and tiny residuals are not lost to
// cancellation.
inline double curvature_dls(const Eigen::Ref<const Matrix>& pts, int d) {
    Matrix centered = pts.rowwise() - pts.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(centered);
    const auto& sv = svd.singularValues();  // descending, length min(m, D)
    double residual = 0.0;
    for (int i = d; i < sv.size(); ++i) residual += sv(i) * sv(i);
    return std::sqrt(std::max(residual, 0.0));
}

// Distance from x to the affine hull of the rows of `hull`.
inline double distance_to_affine_hull(const Eigen::Ref<const Vector>& x,
                                      const Eigen::Ref<const Matrix>& hull) {
    const int n = static_cast<int>(hull.rows());
    const Vector base = hull.row(0).transpose();
    Vector v = x - base;
    if (n == 1) return v.norm();
    Matrix dirs(hull.cols(), n - 1);
    for (int j = 1; j < n; ++j)
        dirs.col(j - 1) = (hull.row(j) - hull.row(0)).transpose();
    Eigen::JacobiSVD<Matrix> svd(dirs, Eigen::ComputeThinU);
    const double thresh =
        svd.singularValues()(0) * 1e-13 * std::max<int>(1, n);
    for (int k = 0; k < svd.singularValues().size(); ++k) {
        if (svd.singularValues()(k) <= thresh) break;
        const Vector u = svd.matrixU().col(k);
        v -= u * u.dot(v);
    }
    return v.norm();
}

inline double curvature_h(const Eigen::Ref<const Matrix>& pts) {
    const int m = static_cast<int>(pts.rows());
    pairwise_distances_checked(pts);
    double best = std::numeric_limits<double>::infinity();
    Matrix rest(m - 1, pts.cols());
    for (int i = 0; i < m; ++i) {
        int r = 0;
        for (int j = 0; j < m; ++j)
            if (j != i) rest.row(r++) = pts.row(j);
        best = std::min(
            best, distance_to_affine_hull(pts.row(i).transpose(), rest));
    }
    return best;
}

}  // namespace detail

/// Alternative least-squares style curvatures on a (d+2)-tuple.
inline double alt_curvature(const PointTuple& tuple, CurvatureKind kind) {
    if (tuple.size() != tuple.intrinsic_dim + 2)
        throw validation_error("alt_curvature: tuple must hold d+2 points");
    switch (kind) {
        case CurvatureKind::polar:
            return polar_curvature(tuple);
        case CurvatureKind::dls:
            return detail::curvature_dls(tuple.points, tuple.intrinsic_dim);
        case CurvatureKind::h:
            return detail::curvature_h(tuple.points);
    }
    throw validation_error("alt_curvature: unknown kind");
}

}  // namespace tscc
