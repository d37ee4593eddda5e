// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Each criterion pins its tolerances in code and is timed against
// its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "tscc/tscc.hpp"

using namespace tscc;

namespace {

struct Checker {
    int failures = 0;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            ++failures;
            if (detail.size() < 4000)
                detail += "      failed: " + what + "\n";
        }
    }
    void note(const std::string& what) { detail += "      " + what + "\n"; }
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<void(Checker&)> run;
};

Matrix random_points(RandomStream& rng, int n, int dim) {
    Matrix pts(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) pts(i, j) = rng.normal();
    return pts;
}

Matrix random_orthonormal(RandomStream& rng, int n, int k) {
    Eigen::HouseholderQR<Matrix> qr(random_points(rng, n, k));
    return qr.householderQ() * Matrix::Identity(n, k);
}

Partition random_partition(RandomStream& rng, int n, int k) {
    std::vector<int> labels(n);
    for (int i = 0; i < k; ++i) labels[i] = i;
    for (int i = k; i < n; ++i)
        labels[i] = static_cast<int>(rng.uniform_index(k));
    return Partition::from_labels(labels, k);
}

Matrix oracle_weight_matrix(const TensorSpec& spec, const Matrix& points) {
    const int n = static_cast<int>(points.rows());
    const int m = spec.tuple_size();
    std::uint64_t cols = 1;
    for (int j = 0; j < m - 1; ++j) cols *= n;
    Matrix unfolded(n, cols);
    std::vector<int> idx(m, 0);
    for (std::uint64_t c = 0; c < cols; ++c) {
        std::uint64_t rest = c;
        for (int j = 1; j < m; ++j) {
            idx[j] = static_cast<int>(rest % n);
            rest /= n;
        }
        for (int i = 0; i < n; ++i) {
            idx[0] = i;
            unfolded(i, c) = affinity_value(spec, points, idx);
        }
    }
    return unfolded * unfolded.transpose();
}

constexpr std::uint64_t kLinesSeed = 9;

void enumerate_sizes(int k, int lo, int hi, std::vector<int>& current,
                     const std::function<void(const std::vector<int>&)>& emit) {
    if (k == 0) {
        emit(current);
        return;
    }
    const int start = current.empty() ? lo : current.back();
    for (int s = start; s <= hi; ++s) {
        current.push_back(s);
        enumerate_sizes(k - 1, lo, hi, current, emit);
        current.pop_back();
    }
}

// ---------------------------------------------------------------------------

void criterion1_perfect_spectrum(Checker& c) {
    int configs = 0;
    for (int d = 0; d <= 2; ++d)
        for (int k = 1; k <= 3; ++k) {
            std::vector<int> current;
            enumerate_sizes(k, d + 3, 10, current, [&](const std::vector<int>& sizes) {
                ++configs;
                const WeightMatrix w = perfect_weight_matrix(sizes, d);
                const Matrix z = normalize_symmetric(w);
                Eigen::SelfAdjointEigenSolver<Matrix> es(z);
                const PerfectSpectrum ps =
                    perfect_spectrum(sizes, d, SpectrumMode::normalized);
                const int n = static_cast<int>(ps.eigenvalues.size());
                int ones = 0;
                for (int i = 0; i < n; ++i) {
                    const double solver = es.eigenvalues()(n - 1 - i);
                    if (std::abs(solver - 1.0) < 1e-9) ++ones;
                    if (std::abs(solver - ps.eigenvalues(i)) > 1e-9) {
                        c.require(false,
                                  "eigenvalue mismatch at K=" + std::to_string(k) +
                                      " d=" + std::to_string(d));
                        return;
                    }
                }
                c.require(ones == k, "expected exactly K eigenvalues of one");
            });
        }
    c.note("checked " + std::to_string(configs) + " (K, d, sizes) configurations");
}

void criterion2_streaming_oracle(Checker& c) {
    RandomStream rng = RandomStream::seeded(2024);
    int cases = 0;
    for (int d = 0; d <= 2; ++d) {
        for (int n : {d + 2, 8}) {
            const Matrix pts = random_points(rng, n, d + 2);
            for (auto variant : {TensorVariant::polar_affine,
                                 TensorVariant::polar_linear,
                                 TensorVariant::polar_power}) {
                if (variant == TensorVariant::polar_linear && d == 0) continue;
                TensorSpec spec;
                spec.variant = variant;
                spec.d = d;
                spec.sigma = 0.8;
                spec.q = 2.0;
                const WeightMatrix streamed = weight_matrix(spec, pts);
                const Matrix oracle = oracle_weight_matrix(spec, pts);
                const double scale =
                    std::max(1e-30, oracle.cwiseAbs().maxCoeff());
                c.require((streamed.entries - oracle).cwiseAbs().maxCoeff() /
                                  scale <
                              1e-10,
                          "streamed W deviates from the unfolded oracle");
                ++cases;
            }
        }
    }
    c.note("compared " + std::to_string(cases) + " streamed/oracle pairs");
}

void criterion3_identity_suite(Checker& c) {
    RandomStream rng = RandomStream::seeded(33);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 12 + static_cast<int>(rng.uniform_index(24));
        const int k = 2 + static_cast<int>(rng.uniform_index(3));
        const Matrix u = random_orthonormal(rng, n, k);
        const Partition p = random_partition(rng, n, k);

        // projector distance vs total variation: dist^2 = 2 TV
        const double tv = total_variation(u, p);
        const double dist = subspace_distance(u, perfect_embedding(p));
        c.require(std::abs(dist * dist - 2.0 * tv) < 1e-9, "projector-distance/TV identity");

        // projector distance vs principal angles: dist^2 = 2 sum sin^2
        const Matrix u2 = random_orthonormal(rng, n, k);
        const Vector angles = principal_angles(u, u2);
        double sins = 0.0;
        for (int i = 0; i < k; ++i)
            sins += std::sin(angles(i)) * std::sin(angles(i));
        const double d12 = subspace_distance(u, u2);
        c.require(std::abs(d12 * d12 - 2.0 * sins) < 1e-9, "principal-angle identity");

        // center mass and separation control
        const Matrix centers = cluster_centers(u, p);
        double mass = 0.0;
        for (int b = 0; b < k; ++b)
            mass += p.index_sets[b].size() * centers.row(b).squaredNorm();
        c.require(std::abs(mass - (k - tv)) < 1e-9, "center-mass identity");
        double cross = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) {
                const double ip = centers.row(a).dot(centers.row(b));
                cross += double(p.index_sets[a].size()) *
                         double(p.index_sets[b].size()) * ip * ip;
            }
        c.require(cross <= tv + 1e-9, "center-separation inequality");
    }
}

struct LinesRun {
    Dataset data;
    TsccResult result;
    PerturbationCheck check;
    BoundConstants constants;
};

LinesRun run_lines(double noise, double sigma) {
    const MixtureModel model = three_lines_model(25, noise, kLinesSeed);
    LinesRun run{sample_mixture(model), {}, {}, {}};
    TsccOptions opts;
    opts.seed = 1;
    run.result = run_tscc(run.data, 1, 3, sigma, opts);

    const auto labels = run.data.truth->to_labels();
    Vector perfect_deg(run.data.size());
    for (int i = 0; i < run.data.size(); ++i)
        perfect_deg(i) = perfect_degree(25, 1);
    run.constants = bound_constants(3, 1, run.data.truth->sizes(),
                                    run.result.weight.degrees, perfect_deg);
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = sigma;
    const Deviation dev = deviation_norm(spec, run.data.points, labels);
    PerturbationRun pr;
    pr.normalized_deviation_sq = dev.normalized_sq;
    pr.tv = total_variation(run.result.embedding.U, *run.data.truth);
    pr.unnormalized = false;
    pr.n = run.data.size();
    pr.k = 3;
    pr.d = 1;
    run.check = check_perturbation_bound(pr, run.constants);
    return run;
}

void criterion4_clean_lines(Checker& c, LinesRun& out) {
    out = run_lines(0.0, 1e-5);
    const auto mis = misclassification(out.result.clustering.labels,
                                       out.data.truth->to_labels(), 3);
    c.require(mis.count == 0, "clean run misclassified " +
                                  std::to_string(mis.count) + " points");
    const Vector& ev = out.result.embedding.eigenvalues;
    for (int i = 0; i < 3; ++i)
        c.require(ev(i) > 0.999, "top eigenvalue " + std::to_string(i + 1) +
                                     " not above 0.999");
    c.require(ev(3) < 0.1, "4th eigenvalue not below 0.1");
    c.note("clean misclassified = 0, lambda_4 = " + std::to_string(ev(3)));
}

void criterion5_noisy_lines(Checker& c, LinesRun& out) {
    out = run_lines(0.025, 0.1840);
    const auto mis = misclassification(out.result.clustering.labels,
                                       out.data.truth->to_labels(), 3);
    c.require(mis.fraction <= 0.08,
              "noisy misclassification " + std::to_string(mis.fraction) +
                  " above 8%");
    c.note("noisy misclassified = " + std::to_string(mis.count) + " of 75 (" +
           std::to_string(100.0 * mis.fraction) + "%)");
}

void criterion6_theorem2(Checker& c, const LinesRun& clean,
                         const LinesRun& noisy) {
    int asserted = 0, reported = 0;
    for (const LinesRun* run : {&clean, &noisy}) {
        if (run->check.hypothesis_met) {
            ++asserted;
            c.require(run->check.bound_holds,
                      "TV exceeds C1 * x with the hypothesis met");
        } else {
            ++reported;
        }
    }
    c.note("hypothesis met on " + std::to_string(asserted) +
           " run(s); reported without assertion on " + std::to_string(reported));
}

void criterion7_degree_bound(Checker& c) {
    // axis-aligned clean flats: within-cluster affinities are exactly one
    Matrix pts(16, 2);
    for (int i = 0; i < 8; ++i) {
        pts(i, 0) = 0.1 * (i + 1);
        pts(i, 1) = 0.0;
        pts(8 + i, 0) = 0.0;
        pts(8 + i, 1) = 0.1 * (i + 1);
    }
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 0.2;
    const WeightMatrix w = weight_matrix(spec, pts);
    const double d_tilde = perfect_degree(8, 1);
    for (int i = 0; i < 16; ++i)
        c.require(w.degrees(i) >= d_tilde, "degree below the perfect degree");

    // sampled clean random lines
    const Dataset ds = sample_mixture(three_lines_model(25, 0.0, kLinesSeed));
    TensorSpec spec2;
    spec2.d = 1;
    spec2.sigma = 0.2;
    const WeightMatrix w2 = weight_matrix(spec2, ds.points);
    const double d_tilde2 = perfect_degree(25, 1);
    for (int i = 0; i < ds.size(); ++i)
        c.require(w2.degrees(i) >= d_tilde2,
                  "degree below the perfect degree on sampled lines");
}

void criterion8_incidence_bounds(Checker& c) {
    struct Case {
        BoundExample example;
        const char* name;
        double L, theta, omega;
    };
    std::vector<Case> cases = {
        {BoundExample::orthogonal_lines_tscc, "ex5.1", 1.0, M_PI / 2, 20.0},
        {BoundExample::angled_lines_tlscc, "ex5.2 theta=pi/6", 1.0, M_PI / 6, 20.0},
        {BoundExample::angled_lines_tlscc, "ex5.2 theta=pi/2", 1.0, M_PI / 2, 20.0},
        {BoundExample::rectangles_tlscc, "ex5.3 omega=20", 1.0, M_PI / 2, 20.0},
        {BoundExample::half_disks_tlscc, "ex5.4", 1.0, M_PI / 2, 20.0},
    };
    std::uint64_t seed = 881;
    for (const auto& cs : cases)
        for (double sigma : {0.05, 0.1, 0.2}) {
            BoundParams params;
            params.L = cs.L;
            params.theta = cs.theta;
            params.omega = cs.omega;
            params.sigma = sigma;
            const ExampleConfig cfg = example_config(cs.example, params);
            const MomentEstimate est = mc_incidence_constant(
                cfg.measures, cfg.d, sigma, cfg.linear, 100000, seed++);
            const double bound = analytic_bound(cs.example, params);
            c.require(est.value <= bound + 3.0 * est.std_error,
                      std::string(cs.name) + " estimate above bound at sigma=" +
                          std::to_string(sigma));
        }

    // direct evaluation of the Example 5.1 closed form at L=1, sigma=0.1
    BoundParams p51;
    p51.L = 1.0;
    p51.sigma = 0.1;
    const double bound51 =
        analytic_bound(BoundExample::orthogonal_lines_tscc, p51);
    c.require(std::abs(bound51 - 0.0707107) <= 1e-6,
              "Example 5.1 bound differs from 0.0707107");
}

void criterion9_moment_oracles(Checker& c) {
    const MeasureSampler seg = builtin_sampler("segment", {});
    const MomentEstimate cp =
        mc_curvature_moment(seg, 0, MomentKind::cp, 100000, 99);
    c.require(std::abs(cp.value - 1.0 / std::sqrt(3.0)) <= 3.0 * cp.std_error,
              "c_p(mu) off the 1/sqrt(3) closed form");
    c.note("c_p = " + std::to_string(cp.value) + " +- " +
           std::to_string(cp.std_error));

    MomentOptions opts;
    opts.pivot_grid = 2000;
    const MomentEstimate hat =
        mc_curvature_moment(seg, 0, MomentKind::cp_hat, 100000, 98, opts);
    c.require(std::abs(hat.value - std::sqrt(2.0 / 3.0)) <= 3.0 * hat.std_error,
              "hat c_p(mu) off the sqrt(2/3) closed form");
    c.note("hat c_p = " + std::to_string(hat.value) + " +- " +
           std::to_string(hat.std_error));
}

void criterion10_id_error_bounds(Checker& c) {
    RandomStream rng = RandomStream::seeded(1001);
    int tested = 0, trials = 0;
    while (tested < 50 && trials < 500) {
        ++trials;
        const int n1 = 8 + static_cast<int>(rng.uniform_index(10));
        const int n2 = n1 + static_cast<int>(rng.uniform_index(10));
        const Partition p = Partition::contiguous({n1, n2});
        Matrix u = perfect_embedding(p);
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < 2; ++j) u(i, j) += 0.05 * rng.normal();
        Eigen::HouseholderQR<Matrix> qr(u);
        u = qr.householderQ() * Matrix::Identity(u.rows(), 2);

        const double tv = total_variation(u, p);
        const double eps1 = 2.0 * n1 / double(n1 + n2);
        const double t_threshold = std::pow(std::sqrt(3.0) - 1.0, 2);
        const double u_threshold =
            std::pow(std::sqrt(2.0 + 4.0 / (eps1 * eps1)) - 2.0 / eps1, 2);
        if (tv >= t_threshold || tv >= u_threshold) continue;
        ++tested;
        c.require(identification_error(row_normalize_T(u, p), p) <=
                      4.0 * tv / (2.0 - tv - 2.0 * std::sqrt(tv)) + 1e-12,
                  "e_id(T) above its TV bound");
        c.require(identification_error(u, p) <=
                      4.0 * tv / (2.0 - tv - 4.0 / eps1 * std::sqrt(tv)) + 1e-12,
                  "e_id(U) above its TV bound");
    }
    c.require(tested == 50, "could not generate 50 qualifying instances");
    c.note("validated both bounds on " + std::to_string(tested) + " instances");
}

void criterion11_unnormalized_spectrum(Checker& c) {
    int configs = 0;
    double worst_trace_gap = 0.0;
    for (int d = 0; d <= 2; ++d)
        for (int k = 1; k <= 2; ++k) {
            std::vector<int> current;
            enumerate_sizes(k, d + 2, 8, current, [&](const std::vector<int>& sizes) {
                ++configs;
                const WeightMatrix w = perfect_weight_matrix(sizes, d);
                Eigen::SelfAdjointEigenSolver<Matrix> es(w.entries);
                const PerfectSpectrum ps =
                    perfect_spectrum(sizes, d, SpectrumMode::unnormalized);
                const int n = static_cast<int>(ps.eigenvalues.size());
                const double scale = std::max(1.0, ps.eigenvalues(0));
                for (int i = 0; i < n; ++i)
                    if (std::abs(es.eigenvalues()(n - 1 - i) - ps.eigenvalues(i)) >
                        1e-9 * scale) {
                        c.require(false, "unnormalized eigenvalue multiset mismatch");
                        return;
                    }
                // trace identity pins the bulk multiplicity at N_k - 1
                double closed_trace = 0.0;
                for (std::size_t b = 0; b < sizes.size(); ++b)
                    closed_trace += ps.top_values[b] +
                                    (sizes[b] - 1) * ps.bulk_values[b];
                worst_trace_gap = std::max(
                    worst_trace_gap, std::abs(closed_trace - w.entries.trace()));
                c.require(std::abs(closed_trace - w.entries.trace()) <= 1e-8,
                          "trace identity broken");
            });
        }
    c.note("checked " + std::to_string(configs) +
           " configurations; bulk eigenvalue nu~_k carries multiplicity "
           "N_k - 1 (trace gap max " +
           std::to_string(worst_trace_gap) + ")");
}

}  // namespace

int main() {
    LinesRun clean, noisy;
    std::vector<Criterion> criteria = {
        {1, "perfect-spectrum exactness (normalized)", 10.0,
         [](Checker& c) { criterion1_perfect_spectrum(c); }},
        {2, "streaming W vs unfolded-oracle W", 30.0,
         [](Checker& c) { criterion2_streaming_oracle(c); }},
        {3, "identity suite (TV, projectors, principal angles)", 10.0,
         [](Checker& c) { criterion3_identity_suite(c); }},
        {4, "clean three-line segmentation", 60.0,
         [&](Checker& c) { criterion4_clean_lines(c, clean); }},
        {5, "noisy three-line segmentation", 60.0,
         [&](Checker& c) { criterion5_noisy_lines(c, noisy); }},
        {6, "perturbation bound (conditional assert)", 30.0,
         [&](Checker& c) { criterion6_theorem2(c, clean, noisy); }},
        {7, "degrees dominate perfect degrees on clean flats", 5.0,
         [](Checker& c) { criterion7_degree_bound(c); }},
        {8, "incidence Monte Carlo vs closed-form bounds", 120.0,
         [](Checker& c) { criterion8_incidence_bounds(c); }},
        {9, "curvature moment oracles on the unit segment", 30.0,
         [](Checker& c) { criterion9_moment_oracles(c); }},
        {10, "identification error bounds on 50 instances", 60.0,
         [](Checker& c) { criterion10_id_error_bounds(c); }},
        {11, "unnormalized perfect spectrum and trace identity", 10.0,
         [](Checker& c) { criterion11_unnormalized_spectrum(c); }},
    };

    int failed = 0;
    double total = 0.0;
    for (auto& cr : criteria) {
        Checker chk;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.run(chk);
        } catch (const std::exception& e) {
            chk.require(false, std::string("exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        total += seconds;
        if (seconds > cr.budget_seconds)
            chk.require(false, "runtime " + std::to_string(seconds) +
                                   " s over the " +
                                   std::to_string(cr.budget_seconds) +
                                   " s budget");
        const bool ok = chk.failures == 0;
        if (!ok) ++failed;
        std::printf("[%s] criterion %2d: %s (%.2f s)\n", ok ? "PASS" : "FAIL",
                    cr.id, cr.name.c_str(), seconds);
        if (!chk.detail.empty()) std::fputs(chk.detail.c_str(), stdout);
    }
    std::printf("%d of %zu criteria passed in %.1f s\n",
                static_cast<int>(criteria.size()) - failed, criteria.size(),
                total);
    return failed == 0 ? 0 : 1;
}
