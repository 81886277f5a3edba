#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlabel/encoding.hpp"
#include "driftlabel/rng.hpp"

using namespace driftlabel;

namespace {

IntMatrix mat(std::initializer_list<std::initializer_list<int>> rows) {
    IntMatrix m(rows.size(), rows.begin()->size());
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (int v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

LabelBatch random_batch(SplitRng& rng, int q, int m, int k) {
    IntMatrix votes(q, m);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < m; ++j)
            votes(i, j) = static_cast<int>(rng.next_below(k + 1));
    return validate_batch(votes, LabelDomain(k));
}

}  // namespace

TEST_CASE("validate_batch accepts in-domain votes") {
    const LabelBatch b = validate_batch(mat({{1, 2, 0}}), LabelDomain(2));
    CHECK(b.num_examples() == 1);
    CHECK(b.num_sources() == 3);
}

TEST_CASE("validate_batch rejects out-of-domain votes with coordinates") {
    try {
        validate_batch(mat({{1, 3, 0}}), LabelDomain(2));
        FAIL("expected OutOfDomainVoteError");
    } catch (const OutOfDomainVoteError& e) {
        CHECK(e.row == 0);
        CHECK(e.col == 1);
        CHECK(e.value == 3);
    }
    CHECK_THROWS_AS(validate_batch(mat({{1, -1, 0}}), LabelDomain(2)), OutOfDomainVoteError);
}

TEST_CASE("validate_batch rejects fewer than three sources") {
    CHECK_THROWS_AS(validate_batch(mat({{1, 2}}), LabelDomain(2)), TooFewSourcesError);
}

TEST_CASE("validate_batch rejects empty input") {
    CHECK_THROWS_AS(validate_batch(IntMatrix(0, 3), LabelDomain(2)), InputError);
}

TEST_CASE("one-vs-rest encoding maps match/mismatch/abstain") {
    const LabelBatch b = validate_batch(mat({{2, 0, 1}}), LabelDomain(3));
    const EncodedMatrix e = encode_one_vs_rest(b, 2);
    CHECK(e.values(0, 0) == 1.0);   // vote 2, c = 2
    CHECK(e.values(0, 1) == 0.0);   // abstain
    CHECK(e.values(0, 2) == -1.0);  // vote 1, c = 2
}

TEST_CASE("one-vs-rest rejects classes outside the domain") {
    const LabelBatch b = validate_batch(mat({{1, 2, 0}}), LabelDomain(2));
    CHECK_THROWS_AS(encode_one_vs_rest(b, 0), InvalidClassError);
    CHECK_THROWS_AS(encode_one_vs_rest(b, 3), InvalidClassError);
}

TEST_CASE("coverage_rates counts non-abstain fractions") {
    const LabelBatch b = validate_batch(
        mat({{1, 0, 1}, {2, 0, 0}, {1, 0, 2}, {2, 0, 0}}), LabelDomain(2));
    const Vector r = coverage_rates(b);
    CHECK(r(0) == 1.0);
    CHECK(r(1) == 0.0);
    CHECK(r(2) == 0.5);
}

TEST_CASE("binary encodings are sign mirrors off the abstain set") {
    SplitRng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelBatch b = random_batch(rng, 17, 4, 2);
        const EncodedMatrix e1 = encode_one_vs_rest(b, 1);
        const EncodedMatrix e2 = encode_one_vs_rest(b, 2);
        CHECK((e1.values + e2.values).norm() == 0.0);
    }
}

TEST_CASE("abstain mask is identical across target classes") {
    SplitRng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_below(3));
        const LabelBatch b = random_batch(rng, 13, 5, k);
        const auto zero_mask = [](const Matrix& v) {
            return (v.array() == 0.0).cast<int>().matrix().eval();
        };
        const auto ref = zero_mask(encode_one_vs_rest(b, 1).values);
        for (int c = 2; c <= k; ++c) {
            CHECK(zero_mask(encode_one_vs_rest(b, c).values) == ref);
        }
    }
}

TEST_CASE("exactly one class matches each non-abstain vote") {
    SplitRng rng(13);
    const int k = 4;
    const LabelBatch b = random_batch(rng, 23, 4, k);
    Matrix positive_count = Matrix::Zero(23, 4);
    for (int c = 1; c <= k; ++c) {
        positive_count += (encode_one_vs_rest(b, c).values.array() == 1.0).cast<double>().matrix();
    }
    for (Eigen::Index i = 0; i < 23; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            CHECK(positive_count(i, j) == (b.votes()(i, j) == kAbstain ? 0.0 : 1.0));
        }
    }
}
