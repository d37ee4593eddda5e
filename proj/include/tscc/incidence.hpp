#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "tscc/common.hpp"
#include "tscc/curvature.hpp"
#include "tscc/modelgen.hpp"

namespace tscc {

enum class MomentKind { cp, cp_linear, cp_power, cp_hat, incidence };

inline const char* moment_kind_name(MomentKind k) {
    switch (k) {
        case MomentKind::cp: return "c_p";
        case MomentKind::cp_linear: return "c_p_linear";
        case MomentKind::cp_power: return "c_p_power";
        case MomentKind::cp_hat: return "c_p_hat";
        case MomentKind::incidence: return "incidence";
    }
    return "?";
}

/// A Monte Carlo estimate with its standard error.
struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
    MomentKind kind = MomentKind::cp;
};

struct MomentOptions {
    double q = 1.0;       // exponent for the cp_power kind
    int pivot_grid = 200; // support draws tried as pivots by the hat kind
    int pivot_probe = 500;  // common tuples used to rank pivots
    int workers = 1;        // draw chunks evaluated concurrently
};

namespace detail {

// mean and standard error of a streamed sample
struct MeanAccumulator {
    KahanSum sum, sum_sq;
    std::int64_t n = 0;
    void add(double x) {
        sum.add(x);
        sum_sq.add(x * x);
        ++n;
    }
    void merge(const MeanAccumulator& other) {
        sum.add(other.sum.sum);
        sum.add(-other.sum.carry);
        sum_sq.add(other.sum_sq.sum);
        sum_sq.add(-other.sum_sq.carry);
        n += other.n;
    }
    double mean() const { return n ? sum.value() / n : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var =
            std::max(0.0, (sum_sq.value() - n * m * m) / (n - 1));
        return std::sqrt(var / n);
    }
};

// Draws are split into fixed chunks, each with its own stream spawned off
// the root seed; chunk results merge in chunk order, so the estimate does
// not depend on the worker count.
template <typename Draw>
MeanAccumulator partitioned_mean(std::int64_t samples, const RandomStream& root,
                                 int workers, Draw&& draw_one) {
    constexpr std::int64_t kChunk = 16384;
    const std::int64_t chunks = (samples + kChunk - 1) / kChunk;
    auto run_chunk = [&](std::int64_t c) {
        RandomStream rng = root.spawn(static_cast<std::uint64_t>(c) + 1);
        MeanAccumulator acc;
        const std::int64_t count = std::min(kChunk, samples - c * kChunk);
        for (std::int64_t i = 0; i < count; ++i) acc.add(draw_one(rng));
        return acc;
    };

    MeanAccumulator total;
    if (workers <= 1) {
        for (std::int64_t c = 0; c < chunks; ++c) total.merge(run_chunk(c));
        return total;
    }
    std::vector<std::future<MeanAccumulator>> inflight;
    std::int64_t next = 0, merged = 0;
    while (merged < chunks) {
        while (next < chunks &&
               inflight.size() < static_cast<std::size_t>(workers))
            inflight.push_back(
                std::async(std::launch::async, run_chunk, next++));
        total.merge(inflight.front().get());
        inflight.erase(inflight.begin());
        ++merged;
    }
    return total;
}

// Draw `count` points of the measure into rows [offset, offset+count) of
// `buf`, redrawing the whole block if the tuple is degenerate downstream.
inline void draw_points(const MeasureSampler& mu, RandomStream& rng, int count,
                        Matrix& buf, int offset) {
    for (int i = 0; i < count; ++i)
        buf.row(offset + i) = mu.draw(rng).transpose();
}

template <typename Eval>
inline double eval_with_redraw(Eval&& make_draw_and_eval, RandomStream& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        try {
            return make_draw_and_eval(rng);
        } catch (const degenerate_tuple_error&) {
            continue;  // measure-zero event; redraw deterministically
        }
    }
    throw numeric_error("monte carlo: persistent degenerate tuples");
}

inline MomentEstimate sqrt_of_mean(const MeanAccumulator& acc, MomentKind kind) {
    MomentEstimate est;
    est.kind = kind;
    est.samples = acc.n;
    const double m = std::max(acc.mean(), 0.0);
    est.value = std::sqrt(m);
    est.std_error = (m > 0.0) ? acc.se() / (2.0 * est.value) : 0.0;
    return est;
}

}  // namespace detail

/// Monte Carlo curvature moments of a measure:
///  - cp:        sqrt E[c_p^2] over (d+2)-tuples
///  - cp_linear: sqrt E[c_p(0, .)^2] over (d+1)-tuples
///  - cp_power:  E[c_p^{2q}] (plain mean)
///  - cp_hat:    sqrt max_pivot E[c_p(pivot, .)^2], the pivot maximized over
///               a finite grid of support draws (a lower bound on the sup)
inline MomentEstimate mc_curvature_moment(const MeasureSampler& mu, int d,
                                          MomentKind kind, std::int64_t m_samples,
                                          std::uint64_t seed,
                                          const MomentOptions& opts = {}) {
    if (m_samples < 100)
        throw validation_error("mc_curvature_moment: need at least 100 samples");
    if (d < 0) throw validation_error("mc_curvature_moment: d must be >= 0");
    if (kind == MomentKind::cp_power && !(opts.q >= 1.0))
        throw validation_error("mc_curvature_moment: q must be >= 1");
    RandomStream root = RandomStream::seeded(seed);

    if (kind == MomentKind::cp || kind == MomentKind::cp_power) {
        const int m = d + 2;
        const detail::MeanAccumulator acc = detail::partitioned_mean(
            m_samples, root, opts.workers, [&](RandomStream& rng) {
                thread_local Matrix buf;
                buf.resize(m, mu.ambient_dim);
                const double c = detail::eval_with_redraw(
                    [&](RandomStream& r) {
                        detail::draw_points(mu, r, m, buf, 0);
                        return detail::polar_curvature(buf);
                    },
                    rng);
                return kind == MomentKind::cp ? c * c
                                              : std::pow(c, 2.0 * opts.q);
            });
        if (kind == MomentKind::cp) return detail::sqrt_of_mean(acc, kind);
        MomentEstimate est;
        est.kind = kind;
        est.samples = acc.n;
        est.value = acc.mean();
        est.std_error = acc.se();
        return est;
    }

    if (kind == MomentKind::cp_linear) {
        const int m = d + 1;
        const detail::MeanAccumulator acc = detail::partitioned_mean(
            m_samples, root, opts.workers, [&](RandomStream& rng) {
                thread_local Matrix buf;
                buf.resize(m, mu.ambient_dim);
                const double c = detail::eval_with_redraw(
                    [&](RandomStream& r) {
                        detail::draw_points(mu, r, m, buf, 0);
                        return detail::polar_curvature_with_origin(buf);
                    },
                    rng);
                return c * c;
            });
        return detail::sqrt_of_mean(acc, kind);
    }

    if (kind == MomentKind::cp_hat) {
        const int rest = d + 1;
        RandomStream pivot_rng = root.spawn(0);
        RandomStream probe_rng = root.spawn(1);

        std::vector<Vector> pivots(opts.pivot_grid);
        for (auto& p : pivots) p = mu.draw(pivot_rng);

        // rank pivots on a common probe sample, then estimate at the winner
        const int probes = std::max(
            32, static_cast<int>(std::min<std::int64_t>(
                    m_samples, std::max<std::int64_t>(
                                   opts.pivot_probe,
                                   m_samples / std::max(1, opts.pivot_grid)))));
        Matrix probe(probes * rest, mu.ambient_dim);
        detail::draw_points(mu, probe_rng, probes * rest, probe, 0);

        Matrix buf(rest + 1, mu.ambient_dim);
        int best = 0;
        double best_mean = -1.0;
        for (std::size_t p = 0; p < pivots.size(); ++p) {
            buf.row(0) = pivots[p].transpose();
            KahanSum sum;
            int used = 0;
            for (int t = 0; t < probes; ++t) {
                buf.bottomRows(rest) = probe.middleRows(t * rest, rest);
                try {
                    const double c = detail::polar_curvature(buf);
                    sum.add(c * c);
                    ++used;
                } catch (const degenerate_tuple_error&) {
                    // skip the collision; all pivots see the same probe set
                }
            }
            const double mean = used ? sum.value() / used : 0.0;
            if (mean > best_mean) {
                best_mean = mean;
                best = static_cast<int>(p);
            }
        }

        const Vector winner = pivots[best];
        const detail::MeanAccumulator acc = detail::partitioned_mean(
            m_samples, root.spawn(2), opts.workers, [&](RandomStream& rng) {
                thread_local Matrix tbuf;
                tbuf.resize(rest + 1, mu.ambient_dim);
                tbuf.row(0) = winner.transpose();
                const double c = detail::eval_with_redraw(
                    [&](RandomStream& r) {
                        detail::draw_points(mu, r, rest, tbuf, 1);
                        return detail::polar_curvature(tbuf);
                    },
                    rng);
                return c * c;
            });
        return detail::sqrt_of_mean(acc, MomentKind::cp_hat);
    }

    throw validation_error("mc_curvature_moment: unsupported kind");
}

/// Monte Carlo estimate of the incidence constant: the worst mixed-cluster
/// expectation of e^{-c_p/sigma}.  Mixed index assignments are collapsed to
/// multiset patterns (the polar curvature is permutation invariant).
inline MomentEstimate mc_incidence_constant(
    const std::vector<MeasureSampler>& measures, int d, double sigma,
    bool linear, std::int64_t m_samples, std::uint64_t seed,
    const MomentOptions& opts = {}) {
    const int k = static_cast<int>(measures.size());
    if (k < 2) throw validation_error("mc_incidence_constant: need K >= 2");
    if (!(sigma > 0.0))
        throw validation_error("mc_incidence_constant: sigma must be positive");
    if (m_samples < 100)
        throw validation_error("mc_incidence_constant: need at least 100 samples");
    const int m = linear ? d + 1 : d + 2;
    const int dim = measures.front().ambient_dim;
    for (const auto& mu : measures)
        if (mu.ambient_dim != dim)
            throw validation_error("mc_incidence_constant: mixed ambient dims");

    // all non-decreasing index patterns of length m that are not constant
    std::vector<std::vector<int>> patterns;
    std::vector<int> cur(m, 0);
    while (true) {
        bool constant = true;
        for (int j = 1; j < m; ++j)
            if (cur[j] != cur[0]) { constant = false; break; }
        if (!constant) patterns.push_back(cur);
        int j = m - 1;
        while (j >= 0 && cur[j] == k - 1) --j;
        if (j < 0) break;
        ++cur[j];
        for (int t = j + 1; t < m; ++t) cur[t] = cur[j];
    }

    RandomStream root = RandomStream::seeded(seed);
    MomentEstimate best;
    best.kind = MomentKind::incidence;
    best.value = -1.0;
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        const std::vector<int>& pattern = patterns[p];
        const detail::MeanAccumulator acc = detail::partitioned_mean(
            m_samples, root.spawn(p), opts.workers, [&](RandomStream& rng) {
                thread_local Matrix buf;
                buf.resize(m, dim);
                return detail::eval_with_redraw(
                    [&](RandomStream& r) {
                        for (int j = 0; j < m; ++j)
                            buf.row(j) = measures[pattern[j]].draw(r).transpose();
                        const double c =
                            linear ? detail::polar_curvature_with_origin(buf)
                                   : detail::polar_curvature(buf);
                        return std::exp(-c / sigma);
                    },
                    rng);
            });
        if (acc.mean() > best.value) {
            best.value = acc.mean();
            best.std_error = acc.se();
            best.samples = acc.n;
        }
    }
    return best;
}

/// alpha = sum_k c_p^2(mu_k) / sigma^2 + C_in(mu_1..mu_K; sigma/2), the
/// within-cluster error term plus the between-cluster interaction.
struct AlphaDecomposition {
    double within_term = 0.0;
    double incidence_term = 0.0;
    double alpha = 0.0;
    double sigma = 0.0;
    double within_std_error = 0.0;
    double incidence_std_error = 0.0;
};

inline AlphaDecomposition alpha_constant(
    const std::vector<MeasureSampler>& measures, int d, double sigma,
    std::int64_t m_samples, std::uint64_t seed, bool linear = false) {
    if (!(sigma > 0.0))
        throw validation_error("alpha_constant: sigma must be positive");
    AlphaDecomposition out;
    out.sigma = sigma;
    double within_var = 0.0;
    for (std::size_t k = 0; k < measures.size(); ++k) {
        const MomentEstimate est = mc_curvature_moment(
            measures[k], d, linear ? MomentKind::cp_linear : MomentKind::cp,
            m_samples, seed + 1000003 * (k + 1));
        // within term uses c_p^2(mu) = the plain mean behind the estimate
        out.within_term += est.value * est.value / (sigma * sigma);
        const double se_mean = 2.0 * est.value * est.std_error;
        within_var += se_mean * se_mean / (sigma * sigma * sigma * sigma);
    }
    out.within_std_error = std::sqrt(within_var);
    const MomentEstimate inc = mc_incidence_constant(
        measures, d, sigma / 2.0, linear, m_samples, seed);
    out.incidence_term = inc.value;
    out.incidence_std_error = inc.std_error;
    out.alpha = out.within_term + out.incidence_term;
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form incidence bounds for the worked examples.

enum class BoundExample {
    orthogonal_lines_tscc,
    angled_lines_tlscc,
    rectangles_tlscc,
    half_disks_tlscc
};

struct BoundParams {
    double L = 1.0;
    double theta = M_PI / 2.0;
    double omega = 10.0;  // L / eps for the rectangle strips
    double sigma = 0.1;
};

inline double analytic_bound(BoundExample example, const BoundParams& p) {
    if (!(p.sigma > 0.0))
        throw validation_error("analytic_bound: sigma must be positive");
    switch (example) {
        case BoundExample::orthogonal_lines_tscc: {
            if (!(p.L > 0.0)) throw validation_error("analytic_bound: L > 0");
            const double a = std::sqrt(2.0) * p.L / p.sigma;
            return (1.0 - std::exp(-a)) / a;
        }
        case BoundExample::angled_lines_tlscc: {
            if (!(p.L > 0.0) || !(p.theta > 0.0) || p.theta > M_PI / 2.0 + 1e-12)
                throw validation_error(
                    "analytic_bound: need L > 0 and 0 < theta <= pi/2");
            const double a = p.L * std::sin(p.theta) / p.sigma;
            return 2.0 / (a * a) * (1.0 - std::exp(-a) * (1.0 + a));
        }
        case BoundExample::rectangles_tlscc: {
            if (!(p.omega > 0.0))
                throw validation_error("analytic_bound: omega > 0");
            const double s34 = std::pow(p.sigma, 0.75);
            return std::sqrt(p.sigma) / (p.omega * p.omega) +
                   2.0 * std::pow(p.sigma, 0.25) / p.omega *
                       std::exp(-1.0 / (2.0 * s34)) +
                   std::exp(-1.0 / s34);
        }
        case BoundExample::half_disks_tlscc: {
            const double s14 = std::pow(p.sigma, 0.25);
            if (!(std::sin(s14) > 0.0))
                throw validation_error("analytic_bound: sigma too large");
            const double s = std::sin(s14);
            return 8.0 * std::sqrt(p.sigma) / (M_PI * M_PI) +
                   8.0 * s14 / M_PI + 4.0 * p.sigma * p.sigma / (s * s * s * s);
        }
    }
    throw validation_error("analytic_bound: unknown example");
}

/// The measures, intrinsic dimension and tensor flavor behind each example.
struct ExampleConfig {
    std::vector<MeasureSampler> measures;
    int d = 1;
    bool linear = false;
};

inline ExampleConfig example_config(BoundExample example, const BoundParams& p) {
    ExampleConfig cfg;
    SamplerParams sp;
    switch (example) {
        case BoundExample::orthogonal_lines_tscc:
            sp.L = p.L;
            cfg.measures.push_back(builtin_sampler("segment", sp));
            sp.theta = M_PI / 2.0;
            cfg.measures.push_back(builtin_sampler("angled_line", sp));
            cfg.d = 1;
            cfg.linear = false;
            break;
        case BoundExample::angled_lines_tlscc:
            sp.L = p.L;
            cfg.measures.push_back(builtin_sampler("segment", sp));
            sp.theta = p.theta;
            cfg.measures.push_back(builtin_sampler("angled_line", sp));
            cfg.d = 1;
            cfg.linear = true;
            break;
        case BoundExample::rectangles_tlscc:
            // the closed form is derived in strip-width units (eps = 1)
            sp.L = p.omega;
            sp.eps = 1.0;
            sp.orientation = 0;
            cfg.measures.push_back(builtin_sampler("rectangle_strip", sp));
            sp.orientation = 1;
            cfg.measures.push_back(builtin_sampler("rectangle_strip", sp));
            cfg.d = 1;
            cfg.linear = true;
            break;
        case BoundExample::half_disks_tlscc:
            sp.orientation = 0;
            cfg.measures.push_back(builtin_sampler("half_disk_3d", sp));
            sp.orientation = 1;
            cfg.measures.push_back(builtin_sampler("half_disk_3d", sp));
            cfg.d = 2;
            cfg.linear = true;
            break;
    }
    return cfg;
}

}  // namespace tscc
