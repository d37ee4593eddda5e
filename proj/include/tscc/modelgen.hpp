#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tscc/common.hpp"
#include "tscc/partition.hpp"

namespace tscc {

/// An affine d-flat given by a base point and an orthonormal frame.
struct Flat {
    Vector base;   // in R^D
    Matrix frame;  // D x d, orthonormal columns

    int ambient_dim() const { return static_cast<int>(base.size()); }
    int dim() const { return static_cast<int>(frame.cols()); }

    void validate() const {
        if (frame.rows() != base.size())
            throw validation_error("Flat: frame/base dimension mismatch");
        if (dim() >= ambient_dim())
            throw validation_error("Flat: need d < D");
        const Matrix gram = frame.transpose() * frame;
        if ((gram - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() >
            1e-10)
            throw validation_error("Flat: frame not orthonormal");
    }

    double distance(const Vector& x) const {
        Vector v = x - base;
        v -= frame * (frame.transpose() * v);
        return v.norm();
    }

    /// Build from (possibly non-orthonormal) spanning directions.
    static Flat from_span(Vector base, const Matrix& directions) {
        Flat f;
        f.base = std::move(base);
        if (directions.cols() == 0) {
            f.frame = Matrix(f.base.size(), 0);
            return f;
        }
        Eigen::HouseholderQR<Matrix> qr(directions);
        f.frame = qr.householderQ() *
                  Matrix::Identity(directions.rows(), directions.cols());
        f.validate();
        return f;
    }

    /// Orthonormal basis of the orthogonal complement of the frame.
    Matrix complement() const {
        const int D = ambient_dim();
        const int d = dim();
        if (d == 0) return Matrix::Identity(D, D);
        Eigen::HouseholderQR<Matrix> qr(frame);
        const Matrix full = qr.householderQ() * Matrix::Identity(D, D);
        return full.rightCols(D - d);
    }
};

/// One mixture component: a flat, its sample count and in-flat support radius.
struct FlatComponent {
    Flat flat;
    int size = 0;
    double support = 1.0;  // in-flat coordinates drawn from [-support, support]^d
};

/// A hybrid linear model: K flats plus orthogonal Gaussian noise.
/// `noise` is the standard deviation as a fraction of the support diameter.
struct MixtureModel {
    std::vector<FlatComponent> components;
    double noise = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (components.empty())
            throw validation_error("MixtureModel: no components");
        const int D = components.front().flat.ambient_dim();
        const int d = components.front().flat.dim();
        for (const auto& c : components) {
            c.flat.validate();
            if (c.flat.ambient_dim() != D || c.flat.dim() != d)
                throw validation_error("MixtureModel: mixed dimensions");
            if (c.size < d + 2)
                throw validation_error("MixtureModel: need >= d+2 points per flat");
            if (!(c.support > 0.0))
                throw validation_error("MixtureModel: support must be positive");
        }
        if (noise < 0.0)
            throw validation_error("MixtureModel: negative noise");
    }
};

/// Sampled data with optional ground truth.
struct Dataset {
    Matrix points;  // N x D
    std::optional<Partition> truth;
    std::string provenance;

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

/// Draw the model's points.  Components are ordered by size (N_1 <= ... <= N_K)
/// and points are grouped by component, so truth blocks are contiguous.
/// Deterministic for a fixed seed.
inline Dataset sample_mixture(const MixtureModel& model) {
    model.validate();
    std::vector<FlatComponent> comps = model.components;
    std::stable_sort(comps.begin(), comps.end(),
                     [](const FlatComponent& a, const FlatComponent& b) {
                         return a.size < b.size;
                     });

    const int D = comps.front().flat.ambient_dim();
    const int d = comps.front().flat.dim();
    int n = 0;
    std::vector<int> sizes;
    for (const auto& c : comps) {
        n += c.size;
        sizes.push_back(c.size);
    }

    RandomStream rng = RandomStream::seeded(model.seed);
    Dataset ds;
    ds.points = Matrix(n, D);
    int row = 0;
    for (const auto& c : comps) {
        const Matrix comp_basis = c.flat.complement();
        // diameter of the in-flat support box; for point flats use the scale
        const double diam = 2.0 * c.support * std::sqrt(std::max(1, d));
        const double noise_std = model.noise * diam;
        for (int i = 0; i < c.size; ++i) {
            Vector x = c.flat.base;
            for (int j = 0; j < d; ++j)
                x += c.flat.frame.col(j) * rng.uniform(-c.support, c.support);
            if (noise_std > 0.0)
                for (int j = 0; j < D - d; ++j)
                    x += comp_basis.col(j) * (noise_std * rng.normal());
            ds.points.row(row++) = x.transpose();
        }
    }
    ds.truth = Partition::contiguous(sizes);
    ds.provenance = "mixture seed=" + std::to_string(model.seed) +
                    " noise=" + std::to_string(model.noise);
    return ds;
}

/// A point sampler for one probability measure.
struct MeasureSampler {
    int ambient_dim = 0;
    std::string name;
    std::function<Vector(RandomStream&)> draw;
};

/// Named measures used by the incidence experiments.
///  - segment(L): arclength-uniform on [0,L] x {0}
///  - angled_line(L, theta): arclength-uniform on the segment at angle theta
///  - rectangle_strip(L, eps, orientation): area-uniform on the horizontal
///    strip [eps, L+eps] x [0, eps] (orientation 0) or its vertical mirror
///    [0, eps] x [eps, L+eps] (orientation 1)
///  - half_disk_3d(orientation): area-uniform on a unit half-disk, in the
///    x=0 plane with z >= 0 (orientation 0) or the z=0 plane with x >= 0
///    (orientation 1)
struct SamplerParams {
    double L = 1.0;
    double theta = M_PI / 2.0;
    double eps = 0.1;
    int orientation = 0;
};

inline MeasureSampler builtin_sampler(const std::string& name,
                                      const SamplerParams& p = {}) {
    MeasureSampler s;
    s.name = name;
    if (name == "segment") {
        if (!(p.L > 0)) throw validation_error("segment: L must be positive");
        s.ambient_dim = 2;
        const double L = p.L;
        s.draw = [L](RandomStream& rng) {
            Vector x(2);
            x << rng.uniform(0.0, L), 0.0;
            return x;
        };
    } else if (name == "angled_line") {
        if (!(p.L > 0) || !(p.theta > 0.0) || p.theta > M_PI / 2.0 + 1e-12)
            throw validation_error("angled_line: need L > 0, 0 < theta <= pi/2");
        s.ambient_dim = 2;
        const double L = p.L, c = std::cos(p.theta), sn = std::sin(p.theta);
        s.draw = [L, c, sn](RandomStream& rng) {
            const double r = rng.uniform(0.0, L);
            Vector x(2);
            x << r * c, r * sn;
            return x;
        };
    } else if (name == "rectangle_strip") {
        if (!(p.L > 0) || !(p.eps > 0))
            throw validation_error("rectangle_strip: need L, eps > 0");
        s.ambient_dim = 2;
        const double L = p.L, e = p.eps;
        const bool vertical = p.orientation != 0;
        s.draw = [L, e, vertical](RandomStream& rng) {
            const double a = rng.uniform(e, L + e);
            const double b = rng.uniform(0.0, e);
            Vector x(2);
            if (vertical)
                x << b, a;
            else
                x << a, b;
            return x;
        };
    } else if (name == "half_disk_3d") {
        s.ambient_dim = 3;
        const bool second = p.orientation != 0;
        s.draw = [second](RandomStream& rng) {
            const double rho = std::sqrt(rng.uniform());
            Vector x(3);
            if (!second) {
                const double phi = rng.uniform(0.0, M_PI);
                x << 0.0, rho * std::cos(phi), rho * std::sin(phi);
            } else {
                const double th = rng.uniform(-M_PI / 2.0, M_PI / 2.0);
                x << rho * std::cos(th), rho * std::sin(th), 0.0;
            }
            return x;
        };
    } else {
        throw validation_error("builtin_sampler: unknown name '" + name + "'");
    }
    return s;
}

/// Total-least-squares d-flat through a point cloud.
struct FlatFit {
    Flat flat;
    double e2 = 0.0;  // sqrt(mean squared orthogonal distance)
};

inline FlatFit fit_lsq_flat(const Matrix& points, int d) {
    const int n = static_cast<int>(points.rows());
    const int D = static_cast<int>(points.cols());
    if (d < 0 || d >= D) throw validation_error("fit_lsq_flat: need 0 <= d < D");
    if (n < d + 1)
        throw validation_error("fit_lsq_flat: need at least d+1 points");

    FlatFit fit;
    fit.flat.base = points.colwise().mean().transpose();
    const Matrix centered = points.rowwise() - points.colwise().mean();
    const Matrix scatter = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Matrix> es(scatter);
    if (es.info() != Eigen::Success)
        throw numeric_error("fit_lsq_flat: eigensolver failed");
    // eigenvalues ascending; top-d eigenvectors form the frame
    fit.flat.frame = Matrix(D, d);
    for (int j = 0; j < d; ++j)
        fit.flat.frame.col(j) = es.eigenvectors().col(D - 1 - j);
    double residual = 0.0;
    for (int i = 0; i < D - d; ++i) residual += std::max(es.eigenvalues()(i), 0.0);
    fit.e2 = std::sqrt(residual / n);
    return fit;
}

// ---------------------------------------------------------------------------
// Dataset CSV: header "x1,...,xD[,label]", one point per line, labels 1-based.

inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
    const int D = ds.dim();
    std::vector<int> labels;
    if (ds.truth) labels = ds.truth->to_labels();
    for (int j = 0; j < D; ++j) os << (j ? "," : "") << "x" << (j + 1);
    if (ds.truth) os << ",label";
    os << "\n";
    char buf[64];
    for (int i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < D; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.points(i, j));
            os << (j ? "," : "") << buf;
        }
        if (ds.truth) os << "," << (labels[i] + 1);
        os << "\n";
    }
}

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    write_dataset_csv(os, ds);
    if (!os) throw io_error("write failed: " + path);
}

inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw io_error("dataset CSV: empty input");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    bool has_label = !header.empty() && header.back() == "label";
    const int D = static_cast<int>(header.size()) - (has_label ? 1 : 0);
    if (D < 1) throw io_error("dataset CSV: no coordinate columns");
    for (int j = 0; j < D; ++j)
        if (header[j] != "x" + std::to_string(j + 1))
            throw io_error("dataset CSV: unexpected header column '" +
                           header[j] + "'");

    std::vector<double> values;
    std::vector<int> labels;
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                if (col < D)
                    values.push_back(std::stod(cell));
                else if (has_label && col == D)
                    labels.push_back(std::stoi(cell) - 1);
                else
                    throw io_error("dataset CSV: too many columns");
            } catch (const std::invalid_argument&) {
                throw io_error("dataset CSV: bad cell '" + cell + "'");
            }
            ++col;
        }
        if (col != D + (has_label ? 1 : 0))
            throw io_error("dataset CSV: wrong column count on row " +
                           std::to_string(rows + 2));
        ++rows;
    }
    Dataset ds;
    ds.points = Matrix(rows, D);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < D; ++j) ds.points(i, j) = values[i * D + j];
    if (has_label) ds.truth = Partition::from_labels(labels);
    ds.provenance = "csv";
    return ds;
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open: " + path);
    return read_dataset_csv(is);
}

// ---------------------------------------------------------------------------
// Declarative model config: "key = value" lines plus one "flat = ..." line
// per component of the form
//   flat = base: 0 0 ; dirs: 1 0 [, 0 1] ; size: 25 ; support: 0.5

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    double v;
    while (ss >> v) out.push_back(v);
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline MixtureModel parse_model_config(std::istream& is) {
    MixtureModel model;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error("model config line " + std::to_string(lineno) +
                           ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "seed") {
            model.seed = std::stoull(value);
        } else if (key == "noise") {
            model.noise = std::stod(value);
        } else if (key == "flat") {
            Vector base;
            Matrix dirs;
            FlatComponent comp;
            std::stringstream fields(value);
            std::string field;
            while (std::getline(fields, field, ';')) {
                const auto colon = field.find(':');
                if (colon == std::string::npos)
                    throw io_error("model config line " +
                                   std::to_string(lineno) +
                                   ": expected 'name: values'");
                const std::string fname = detail::trim(field.substr(0, colon));
                const std::string fval = detail::trim(field.substr(colon + 1));
                if (fname == "base") {
                    const auto nums = detail::parse_numbers(fval);
                    base = Eigen::Map<const Vector>(nums.data(), nums.size());
                } else if (fname == "dirs") {
                    std::stringstream vs(fval);
                    std::string one;
                    std::vector<std::vector<double>> cols;
                    while (std::getline(vs, one, ','))
                        cols.push_back(detail::parse_numbers(one));
                    if (cols.empty() || cols.front().empty())
                        throw io_error("model config: empty dirs");
                    dirs = Matrix(cols.front().size(), cols.size());
                    for (std::size_t c = 0; c < cols.size(); ++c) {
                        if (cols[c].size() != static_cast<std::size_t>(dirs.rows()))
                            throw io_error("model config: ragged dirs");
                        for (std::size_t r = 0; r < cols[c].size(); ++r)
                            dirs(r, c) = cols[c][r];
                    }
                } else if (fname == "size") {
                    comp.size = std::stoi(fval);
                } else if (fname == "support") {
                    comp.support = std::stod(fval);
                } else {
                    throw io_error("model config: unknown field '" + fname + "'");
                }
            }
            if (base.size() == 0)
                throw io_error("model config: flat without base");
            comp.flat = Flat::from_span(base, dirs);
            model.components.push_back(std::move(comp));
        } else {
            throw io_error("model config: unknown key '" + key + "'");
        }
    }
    model.validate();
    return model;
}

inline MixtureModel parse_model_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open: " + path);
    return parse_model_config(is);
}

/// K random lines in the unit square: uniform angle, uniform center.
inline MixtureModel random_lines_model(int k, int points_per_line,
                                       double noise, std::uint64_t seed,
                                       const std::vector<int>* sizes = nullptr) {
    RandomStream rng = RandomStream::seeded(seed * 2654435761u + 17);
    MixtureModel model;
    model.noise = noise;
    model.seed = seed;
    for (int j = 0; j < k; ++j) {
        const double angle = rng.uniform(0.0, M_PI);
        Vector base(2);
        base << rng.uniform(), rng.uniform();
        Matrix dir(2, 1);
        dir << std::cos(angle), std::sin(angle);
        FlatComponent comp;
        comp.flat = Flat::from_span(base, dir);
        comp.size = sizes ? (*sizes)[j] : points_per_line;
        comp.support = 0.5;
        model.components.push_back(std::move(comp));
    }
    return model;
}

inline MixtureModel three_lines_model(int points_per_line, double noise,
                                      std::uint64_t seed) {
    return random_lines_model(3, points_per_line, noise, seed);
}

}  // namespace tscc
