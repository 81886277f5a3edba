#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "driftlabel/estimator.hpp"
#include "driftlabel/rng.hpp"
#include "driftlabel/synthgen.hpp"

using namespace driftlabel;

namespace {

Matrix diag_minus_rank1(const Vector& d, const Vector& z) {
    Matrix m = d.asDiagonal();
    return m - z * z.transpose();
}

DependencyStructure empty_graph(int m) {
    return edges_from_sparse(Matrix::Zero(m, m), 0.1);
}

SyntheticSpec stream_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.m = 5;
    spec.k = 2;
    spec.prior = {0.5, 0.5};
    spec.accuracy = {0.75, 0.65, 0.7, 0.6, 0.8};
    spec.coverage = {1.0, 1.0, 1.0, 1.0, 1.0};
    spec.seed = seed;
    return spec;
}

EstimatorConfig stream_config() {
    EstimatorConfig cfg;
    cfg.threshold.absolute = 0.35;
    return cfg;
}

}  // namespace

TEST_CASE("masked fit recovers a planted z up to sign") {
    Vector z(3);
    z << 0.8, 0.6, 0.7;
    const Matrix k_inv = diag_minus_rank1(Vector::Constant(3, 2.0), z);
    const FitResult r = fit_z_masked(k_inv, empty_graph(3));
    REQUIRE(r.converged);
    CHECK(r.objective <= 1e-12);
    const double err = std::min((r.z - z).norm(), (r.z + z).norm());
    CHECK(err <= 1e-6);
}

TEST_CASE("masked fit matches the triplet closed form") {
    // independent oracle: |z_i| = sqrt(|k_ij k_ik / k_jk|) on the off-diagonals
    Vector z(3);
    z << 0.5, 0.8, 0.3;
    const Matrix k_inv = diag_minus_rank1(Vector::Constant(3, 2.0), z);
    const double k01 = -k_inv(0, 1), k02 = -k_inv(0, 2), k12 = -k_inv(1, 2);
    Vector closed(3);
    closed << std::sqrt(std::abs(k01 * k02 / k12)), std::sqrt(std::abs(k01 * k12 / k02)),
        std::sqrt(std::abs(k02 * k12 / k01));
    const FitResult r = fit_z_masked(k_inv, empty_graph(3));
    REQUIRE(r.converged);
    CHECK((r.z.cwiseAbs() - closed).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("empty mask is underdetermined") {
    Matrix dense = Matrix::Constant(3, 3, 1.0);
    const DependencyStructure all_edges = edges_from_sparse(dense, 0.5);
    CHECK(all_edges.mask.empty());
    CHECK_THROWS_AS(fit_z_masked(Matrix::Identity(3, 3), all_edges),
                    UnderdeterminedError);
}

TEST_CASE("too small a mask is underdetermined") {
    Matrix s = Matrix::Constant(4, 4, 1.0);
    s(0, 1) = s(1, 0) = 0.0;
    s(2, 3) = s(3, 2) = 0.0;
    const DependencyStructure st = edges_from_sparse(s, 0.5);
    CHECK(st.mask.size() == 2);  // < m = 4
    CHECK_THROWS_AS(fit_z_masked(Matrix::Identity(4, 4), st), UnderdeterminedError);
}

TEST_CASE("flipping the init flips nothing but the sign") {
    Vector z(4);
    z << 0.6, -0.4, 0.5, 0.3;
    const Matrix k_inv = diag_minus_rank1(Vector::Constant(4, 2.0), z);
    Vector init = Vector::Constant(4, 0.5);
    const FitResult a = fit_z_masked(k_inv, empty_graph(4), init);
    const FitResult b = fit_z_masked(k_inv, empty_graph(4), Vector(-init));
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
    CHECK((a.z + b.z).norm() <= 1e-6);
}

TEST_CASE("estimate_c arithmetic") {
    CHECK(estimate_c(Vector::Zero(2), Matrix::Identity(2, 2), 1.0) == doctest::Approx(1.0));
    Vector e1(2);
    e1 << 1.0, 0.0;
    CHECK(estimate_c(e1, Matrix::Identity(2, 2), 1.0) == doctest::Approx(2.0));
    Matrix s(2, 2);
    s << 1.0, 0.5, 0.5, 1.0;
    CHECK(estimate_c(Vector::Constant(2, 1.0), s, 0.75) ==
          doctest::Approx(16.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("non-positive c is rejected") {
    Matrix bad = -2.0 * Matrix::Identity(2, 2);
    Vector e1(2);
    e1 << 1.0, 0.0;
    CHECK_THROWS_AS(estimate_c(e1, bad, 1.0), NonPositiveCError);
}

TEST_CASE("estimate_mu arithmetic and clamping") {
    const Vector nu = Vector::Zero(3);
    const Vector r = Vector::Ones(3);
    Vector z(3);
    z << 0.6, 0.8, 0.0;
    const AccuracyEstimate e =
        estimate_mu(Matrix::Identity(3, 3), z, 2.0, ClassPrior::uninformative(), nu, r);
    CHECK((e.mu - z / std::sqrt(2.0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((e.sigma_os - e.mu).norm() == 0.0);  // E[Y] = 0
    CHECK_FALSE(e.any_clamped());

    // z = 0 means every source sits at chance
    const AccuracyEstimate zero =
        estimate_mu(Matrix::Identity(3, 3), Vector::Zero(3), 1.0,
                    ClassPrior::uninformative(), nu, r);
    CHECK(zero.mu.norm() == 0.0);

    // a correlation beyond the coverage bound is clamped and flagged
    Vector big(3);
    big << 4.0, 0.0, 0.0;
    const AccuracyEstimate clamped =
        estimate_mu(Matrix::Identity(3, 3), big, 1.0, ClassPrior::uninformative(), nu, r);
    CHECK(clamped.mu(0) == 1.0);
    CHECK(clamped.clamped[0]);
    CHECK(clamped.any_clamped());
}

TEST_CASE("correlation_to_accuracy endpoints") {
    CHECK(correlation_to_accuracy(0.8, 0.8) == doctest::Approx(1.0));
    CHECK(correlation_to_accuracy(0.0, 0.8) == doctest::Approx(0.5));
    CHECK(correlation_to_accuracy(-0.8, 0.8) == doctest::Approx(0.0));
    CHECK_THROWS_AS(correlation_to_accuracy(0.0, 0.0), NoCoverageError);
}

TEST_CASE("ewma endpoints and direct arithmetic") {
    EstimatorState s = EstimatorState::fresh(2, 0.0);
    s.num_sources = 1;
    s = ewma_update(s, {Vector::Constant(1, 0.6)}, Vector::Ones(1));  // first batch
    CHECK(s.mu[0](0) == 0.6);

    EstimatorState frozen = s;
    frozen.alpha = 0.0;
    frozen = ewma_update(frozen, {Vector::Constant(1, 0.9)}, Vector::Ones(1));
    CHECK(frozen.mu[0](0) == 0.6);

    EstimatorState replace = s;
    replace.alpha = 1.0;
    replace = ewma_update(replace, {Vector::Constant(1, 0.9)}, Vector::Ones(1));
    CHECK(replace.mu[0](0) == 0.9);

    EstimatorState mixed = s;
    mixed.alpha = 0.05;
    mixed = ewma_update(mixed, {Vector::Constant(1, 0.8)}, Vector::Ones(1));
    CHECK(mixed.mu[0](0) == doctest::Approx(0.61).epsilon(1e-15));
}

TEST_CASE("ewma unrolls to the closed geometric form") {
    const double alpha = 0.13;
    SplitRng rng(17);
    EstimatorState s = EstimatorState::fresh(2, alpha);
    s.num_sources = 3;
    std::vector<Vector> batches;
    for (int p = 0; p < 10; ++p) {
        Vector mu(3);
        for (int i = 0; i < 3; ++i) mu(i) = 2.0 * rng.next_double() - 1.0;
        batches.push_back(mu);
        s = ewma_update(s, {mu}, Vector::Ones(3));
    }
    // mu = (1-a)^(p-1) mu_1 + a sum_{j=2..p} (1-a)^(p-j) mu_j
    const int p = static_cast<int>(batches.size());
    Vector expect = std::pow(1.0 - alpha, p - 1) * batches[0];
    for (int j = 2; j <= p; ++j) {
        expect += alpha * std::pow(1.0 - alpha, p - j) * batches[j - 1];
    }
    CHECK((s.mu[0] - expect).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(s.batches_seen == 10);
}

TEST_CASE("first batch is the offline pipeline, alpha plays no role") {
    const SyntheticSpec spec = stream_spec(101);
    const GeneratedBatch gen = generate(spec, 800, 0);

    EstimatorConfig cfg = stream_config();
    cfg.alpha = 0.3;
    const BatchOutcome a =
        process_batch(EstimatorState::fresh(2, 0.3), gen.batch, cfg);
    cfg.alpha = 0.7;
    const BatchOutcome b =
        process_batch(EstimatorState::fresh(2, 0.7), gen.batch, cfg);
    CHECK((a.state.mu[0] - b.state.mu[0]).norm() == 0.0);
    CHECK(a.state.batches_seen == 1);
    CHECK(a.state.structure.has_value());
}

TEST_CASE("replaying a stream reproduces the state bitwise") {
    const SyntheticSpec spec = stream_spec(7);
    const EstimatorConfig cfg = stream_config();

    auto run = [&] {
        EstimatorState s = EstimatorState::fresh(2, 0.05);
        for (std::size_t b = 0; b < 12; ++b) {
            const GeneratedBatch gen = generate(spec, 300, b);
            s = process_batch(s, gen.batch, cfg).state;
        }
        return s;
    };
    const EstimatorState s1 = run();
    const EstimatorState s2 = run();
    CHECK(s1.mu[0] == s2.mu[0]);
    CHECK(s1.z[0] == s2.z[0]);
    CHECK(s1.coverage == s2.coverage);
}

TEST_CASE("a stationary stream converges toward the true correlations") {
    const SyntheticSpec spec = stream_spec(19);
    const Vector truth = true_mu(spec, 1);
    const EstimatorConfig cfg = stream_config();

    EstimatorState s = EstimatorState::fresh(2, 0.05);
    for (std::size_t b = 0; b < 40; ++b) {
        const GeneratedBatch gen = generate(spec, 400, b);
        s = process_batch(s, gen.batch, cfg).state;
    }
    CHECK((s.mu[0] - truth).cwiseAbs().maxCoeff() <= 0.06);
}

TEST_CASE("a failed batch leaves the caller's state untouched") {
    const SyntheticSpec spec = stream_spec(3);
    const EstimatorConfig cfg = stream_config();
    EstimatorState s = EstimatorState::fresh(2, 0.05);
    s = process_batch(s, generate(spec, 400, 0).batch, cfg).state;
    const EstimatorState before = s;

    EstimatorConfig broken = cfg;
    broken.fit.max_iter = 1;
    broken.fit.tol = 1e-16;
    CHECK_THROWS_AS(process_batch(s, generate(spec, 400, 1).batch, broken),
                    NoConvergenceError);
    CHECK(s.mu[0] == before.mu[0]);
    CHECK(s.batches_seen == 1);
}

TEST_CASE("source count changes are rejected mid-stream") {
    const SyntheticSpec spec = stream_spec(3);
    const EstimatorConfig cfg = stream_config();
    EstimatorState s = EstimatorState::fresh(2, 0.05);
    s = process_batch(s, generate(spec, 200, 0).batch, cfg).state;

    SyntheticSpec other = spec;
    other.m = 4;
    other.accuracy = {0.7, 0.7, 0.7, 0.7};
    other.coverage = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(process_batch(s, generate(other, 200, 1).batch, cfg),
                    LengthMismatchError);
}

TEST_CASE("multiclass streams run one estimation per class") {
    SyntheticSpec spec;
    spec.m = 4;
    spec.k = 3;
    spec.prior = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    spec.accuracy = {0.7, 0.65, 0.75, 0.6};
    spec.coverage = {1.0, 0.9, 1.0, 0.8};
    spec.seed = 5;

    EstimatorState s = EstimatorState::fresh(3, 0.05);
    const EstimatorConfig cfg = stream_config();
    for (std::size_t b = 0; b < 3; ++b) {
        const BatchOutcome out = process_batch(s, generate(spec, 600, b).batch, cfg);
        s = out.state;
        CHECK(out.estimates.size() == 3);
    }
    CHECK(s.mu.size() == 3);
    CHECK(s.num_runs() == 3);
}
