#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "tscc/affinity.hpp"
#include "tscc/modelgen.hpp"

using namespace tscc;

namespace {

// Brute-force oracle: materialize the full unfolded N x N^{m-1} matrix from
// affinity_value over ordered tuples and multiply.  Only viable for tiny N.
Matrix oracle_weight_matrix(const TensorSpec& spec, const Matrix& points) {
    const int n = static_cast<int>(points.rows());
    const int m = spec.tuple_size();
    std::uint64_t cols = 1;
    for (int j = 0; j < m - 1; ++j) cols *= n;
    REQUIRE(static_cast<double>(cols) * n <= 1e6);

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

double oracle_deviation_sq(const TensorSpec& spec, const Matrix& points,
                           const std::vector<int>& truth) {
    const int n = static_cast<int>(points.rows());
    const int m = spec.tuple_size();
    std::uint64_t total = 1;
    for (int j = 0; j < m; ++j) total *= n;
    REQUIRE(static_cast<double>(total) <= 1e6);

    double sum = 0.0;
    std::vector<int> idx(m, 0);
    for (std::uint64_t c = 0; c < total; ++c) {
        std::uint64_t rest = c;
        bool distinct = true;
        for (int j = 0; j < m; ++j) {
            idx[j] = static_cast<int>(rest % n);
            rest /= n;
        }
        for (int a = 0; a < m && distinct; ++a)
            for (int b = a + 1; b < m; ++b)
                if (idx[a] == idx[b]) { distinct = false; break; }
        const double av = affinity_value(spec, points, idx);
        double perfect = 0.0;
        if (distinct) {
            perfect = 1.0;
            for (int j = 1; j < m; ++j)
                if (truth[idx[j]] != truth[idx[0]]) { perfect = 0.0; break; }
        }
        sum += (av - perfect) * (av - perfect);
    }
    return sum;
}

Matrix random_points(RandomStream& rng, int n, int dim) {
    Matrix pts(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) pts(i, j) = rng.normal();
    return pts;
}

}  // namespace

TEST_CASE("perm basics") {
    CHECK(perm(5, 2) == 20);
    CHECK(perm(7, 0) == 1);
    CHECK(perm(0, 0) == 1);
    CHECK(perm(4, 4) == 24);
    CHECK(perm(3, 5) == 0);
}

TEST_CASE("affinity_value handles repeats, collinear data and known values") {
    RandomStream rng = RandomStream::seeded(3);
    const Matrix pts = random_points(rng, 5, 2);
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 0.7;

    CHECK(affinity_value(spec, pts, {0, 1, 1}) == 0.0);
    CHECK(affinity_value(spec, pts, {2, 2, 2}) == 0.0);

    Matrix collinear(4, 2);
    collinear << 0, 0, 1, 0, 2, 0, 3.5, 0;
    CHECK(affinity_value(spec, collinear, {0, 1, 3}) == Approx(1.0));

    Matrix right(3, 2);
    right << 0, 0, 1, 0, 0, 1;
    spec.sigma = 2.0;
    CHECK(affinity_value(spec, right, {0, 1, 2}) ==
          Approx(std::exp(-1.0)).epsilon(1e-12));

    // perfect variant needs ground truth
    TensorSpec perfect;
    perfect.variant = TensorVariant::perfect;
    perfect.d = 1;
    CHECK_THROWS_AS(affinity_value(perfect, pts, {0, 1, 2}), validation_error);
    perfect.ground_truth = {0, 0, 0, 1, 1};
    CHECK(affinity_value(perfect, pts, {0, 1, 2}) == 1.0);
    CHECK(affinity_value(perfect, pts, {0, 1, 3}) == 0.0);
}

TEST_CASE("streaming W equals the closed-form perfect W") {
    // every configuration with K <= 3 clusters, N_k <= 8, d <= 2
    int configs = 0;
    for (int d = 0; d <= 2; ++d) {
        std::vector<std::vector<int>> all_sizes;
        for (int a = d + 2; a <= 8; ++a) {
            all_sizes.push_back({a});
            for (int b = a; b <= 8; ++b) {
                all_sizes.push_back({a, b});
                for (int c = b; c <= 8; ++c) all_sizes.push_back({a, b, c});
            }
        }
        RandomStream rng = RandomStream::seeded(100 + d);
        for (const auto& sizes : all_sizes) {
            int n = 0;
            std::vector<int> labels;
            for (std::size_t k = 0; k < sizes.size(); ++k) {
                n += sizes[k];
                labels.insert(labels.end(), sizes[k], static_cast<int>(k));
            }
            const Matrix pts = random_points(rng, n, d + 2);
            TensorSpec spec;
            spec.variant = TensorVariant::perfect;
            spec.d = d;
            spec.ground_truth = labels;

            const WeightMatrix streamed = weight_matrix(spec, pts);
            const WeightMatrix closed = perfect_weight_matrix(sizes, d);
            REQUIRE((streamed.entries - closed.entries).cwiseAbs().maxCoeff() <=
                    1e-10 * std::max(1.0, closed.entries.maxCoeff()));
            REQUIRE((streamed.degrees - closed.degrees).cwiseAbs().maxCoeff() <=
                    1e-10 * closed.degrees.maxCoeff());
            ++configs;
        }
    }
    CHECK(configs == 257);
}

TEST_CASE("perfect_weight_matrix closed-form values") {
    const WeightMatrix w5 = perfect_weight_matrix({5}, 1);
    CHECK(w5.entries(0, 0) == Approx(12.0));
    CHECK(w5.entries(0, 1) == Approx(6.0));
    CHECK(w5.degrees(0) == Approx(36.0));

    const WeightMatrix w55 = perfect_weight_matrix({5, 5}, 0);
    CHECK(w55.entries(0, 0) == Approx(4.0));
    CHECK(w55.entries(0, 1) == Approx(3.0));
    CHECK(w55.entries(0, 5) == 0.0);
    CHECK(w55.degrees(0) == Approx(16.0));

    CHECK_THROWS_AS(perfect_weight_matrix({3}, 2), validation_error);
}

TEST_CASE("streaming W matches the brute-force oracle on random data") {
    RandomStream rng = RandomStream::seeded(42);
    for (int d = 0; d <= 2; ++d) {
        const int n = std::min(8, d + 5);
        const Matrix pts = random_points(rng, n, 2 + d);
        for (auto variant : {TensorVariant::polar_affine,
                             TensorVariant::polar_linear,
                             TensorVariant::polar_power}) {
            if (variant == TensorVariant::polar_linear && d == 0) continue;
            TensorSpec spec;
            spec.variant = variant;
            spec.d = d;
            spec.sigma = 0.9;
            spec.q = 2.0;
            const WeightMatrix streamed = weight_matrix(spec, pts);
            const Matrix oracle = oracle_weight_matrix(spec, pts);
            const double scale = std::max(1e-30, oracle.cwiseAbs().maxCoeff());
            CHECK((streamed.entries - oracle).cwiseAbs().maxCoeff() / scale <
                  1e-10);
        }
    }
}

TEST_CASE("W for hand-checked tiny configurations") {
    // 4 collinear points, d=1: every distinct-tuple affinity is 1, so W is
    // the perfect W of one 4-cluster
    Matrix collinear(4, 2);
    collinear << 0, 0, 1, 0, 2.5, 0, 4, 0;
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 0.3;
    const WeightMatrix w = weight_matrix(spec, collinear);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(w.entries(i, j) == Approx(i == j ? 6.0 : 2.0).margin(1e-9));

    // d=0, two points at distance t: the only tuple in each row involves the
    // other point, so W = A A' is diagonal
    Matrix pair(2, 1);
    pair << 0.0, 0.7;
    TensorSpec spec0;
    spec0.d = 0;
    spec0.sigma = 0.5;
    const WeightMatrix w2 = weight_matrix(spec0, pair);
    const double expected = std::exp(-2.0 * std::sqrt(2.0) * 0.7 / 0.5);
    CHECK(w2.entries(0, 0) == Approx(expected).epsilon(1e-12));
    CHECK(w2.entries(1, 1) == Approx(expected).epsilon(1e-12));
    CHECK(w2.entries(0, 1) == 0.0);
    const Matrix oracle = oracle_weight_matrix(spec0, pair);
    CHECK((w2.entries - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("W is symmetric PSD and monotone in sigma") {
    RandomStream rng = RandomStream::seeded(5);
    const Matrix pts = random_points(rng, 9, 3);
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 0.4;
    const WeightMatrix w1 = weight_matrix(spec, pts);
    CHECK((w1.entries - w1.entries.transpose()).cwiseAbs().maxCoeff() <
          1e-10 * w1.entries.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> es(w1.entries);
    CHECK(es.eigenvalues().minCoeff() >=
          -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()));

    spec.sigma = 0.8;
    const WeightMatrix w2 = weight_matrix(spec, pts);
    CHECK(((w2.entries - w1.entries).minCoeff()) >= -1e-12);
}

TEST_CASE("W converges entrywise to the perfect W as sigma -> 0+ on clean data") {
    // two axis-aligned clean lines, exactly zero within-cluster curvature
    Matrix pts(10, 2);
    for (int i = 0; i < 5; ++i) {
        pts(i, 0) = 0.11 * (i + 1);
        pts(i, 1) = 0.0;
        pts(5 + i, 0) = 3.0;
        pts(5 + i, 1) = 0.13 * (i + 1);
    }
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 1e-5;
    const WeightMatrix w = weight_matrix(spec, pts);
    const WeightMatrix perfect = perfect_weight_matrix({5, 5}, 1);
    const double diag = perfect.entries(0, 0);
    CHECK((w.entries - perfect.entries).cwiseAbs().maxCoeff() / diag < 1e-3);
}

TEST_CASE("degrees dominate the perfect degrees on clean flats") {
    Matrix pts(12, 2);
    for (int i = 0; i < 6; ++i) {
        pts(i, 0) = 0.2 * i - 0.5;
        pts(i, 1) = 0.0;
        pts(6 + i, 0) = 0.0;
        pts(6 + i, 1) = 0.2 * i - 0.4;
    }
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 0.25;
    const WeightMatrix w = weight_matrix(spec, pts);
    const double d_tilde = perfect_degree(6, 1);
    for (int i = 0; i < 12; ++i) CHECK(w.degrees(i) >= d_tilde);
}

TEST_CASE("deviation norm: definitional cases and oracle agreement") {
    Matrix pts(6, 2);
    RandomStream rng = RandomStream::seeded(8);
    pts = random_points(rng, 6, 2);
    std::vector<int> labels{0, 0, 0, 1, 1, 1};
    TensorSpec perfect;
    perfect.variant = TensorVariant::perfect;
    perfect.d = 1;
    perfect.ground_truth = labels;
    CHECK(deviation_norm(perfect, pts, labels).frobenius == 0.0);

    // all-zero affinities vs a single d+2 cluster: ||E||_F^2 = (d+2)!
    for (int d = 0; d <= 2; ++d) {
        const int n = d + 2;
        Matrix small = random_points(rng, n, d + 1);
        TensorSpec tiny;
        tiny.d = d;
        tiny.sigma = 1e-300;  // kills every positive-curvature affinity
        std::vector<int> one_cluster(n, 0);
        const Deviation dev = deviation_norm(tiny, small, one_cluster);
        CHECK(dev.frobenius * dev.frobenius ==
              Approx(double(factorial(d + 2))).epsilon(1e-9));
        CHECK(dev.normalized_sq ==
              Approx(double(factorial(d + 2)) / std::pow(double(n), d + 2))
                  .epsilon(1e-9));
    }

    // random small instances match the full-tensor oracle
    for (int d = 0; d <= 1; ++d) {
        const int n = 6;
        const Matrix sample = random_points(rng, n, 2);
        std::vector<int> truth{0, 0, 0, 1, 1, 1};
        TensorSpec spec;
        spec.d = d;
        spec.sigma = 0.6;
        const Deviation dev = deviation_norm(spec, sample, truth);
        const double oracle = oracle_deviation_sq(spec, sample, truth);
        CHECK(dev.frobenius * dev.frobenius == Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("weight_matrix rejects bad inputs") {
    RandomStream rng = RandomStream::seeded(1);
    const Matrix pts = random_points(rng, 3, 2);
    TensorSpec spec;
    spec.d = 2;
    spec.sigma = 1.0;
    CHECK_THROWS_AS(weight_matrix(spec, pts), validation_error);  // N < d+2

    TensorSpec bad;
    bad.d = 1;
    bad.sigma = -1.0;
    CHECK_THROWS_AS(weight_matrix(bad, pts), validation_error);

    TensorSpec ok;
    ok.d = 0;
    ok.sigma = 1.0;
    WeightOptions opts;
    opts.memory_cap_bytes = 16;  // absurdly small cap trips the estimate
    CHECK_THROWS_AS(weight_matrix(ok, pts, opts), validation_error);
}

TEST_CASE("streaming is deterministic across worker counts") {
    RandomStream rng = RandomStream::seeded(77);
    const Matrix pts = random_points(rng, 10, 2);
    TensorSpec spec;
    spec.d = 1;
    spec.sigma = 0.5;
    WeightOptions one;
    one.workers = 1;
    WeightOptions four;
    four.workers = 4;
    const WeightMatrix a = weight_matrix(spec, pts, one);
    const WeightMatrix b = weight_matrix(spec, pts, four);
    // same terms, same per-chunk order; only the final reduction differs
    CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() <
          1e-13 * a.entries.maxCoeff());
}
