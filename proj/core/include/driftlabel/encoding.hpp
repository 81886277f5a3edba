#pragma once

#include <Eigen/Core>

#include <cstddef>

#include "driftlabel/errors.hpp"

namespace driftlabel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;
using IntVector = Eigen::VectorXi;

constexpr int kAbstain = 0;

/// Label domain: classes are {1,...,k}, vote 0 means the source abstained.
/// k is fixed for the lifetime of a stream.
class LabelDomain {
public:
    explicit LabelDomain(int num_classes);

    int num_classes() const { return k_; }
    bool contains_vote(int v) const { return v >= 0 && v <= k_; }

private:
    int k_;
};

/// One validated batch of raw source votes, rows = examples, columns = sources.
class LabelBatch {
public:
    LabelBatch(IntMatrix votes, LabelDomain domain, std::size_t batch_index = 0);

    const IntMatrix& votes() const { return votes_; }
    const LabelDomain& domain() const { return domain_; }
    std::size_t batch_index() const { return batch_index_; }
    std::size_t num_examples() const { return static_cast<std::size_t>(votes_.rows()); }
    std::size_t num_sources() const { return static_cast<std::size_t>(votes_.cols()); }

private:
    IntMatrix votes_;
    LabelDomain domain_;
    std::size_t batch_index_;
};

/// One-vs-rest signed encoding of a batch for a single target class:
/// +1 = voted the class, -1 = voted some other class, 0 = abstained.
struct EncodedMatrix {
    Matrix values;     // q x m over {-1, 0, +1}
    int target_class;  // 1..k
};

/// Validates a raw vote matrix against the domain.
/// Throws OutOfDomainVoteError or TooFewSourcesError.
LabelBatch validate_batch(const IntMatrix& raw, const LabelDomain& domain,
                          std::size_t batch_index = 0);

/// Reduces the multiclass votes to the +-1/0 encoding for class c.
EncodedMatrix encode_one_vs_rest(const LabelBatch& batch, int target_class);

/// Per-source fraction of non-abstain votes, each in [0, 1].
Vector coverage_rates(const LabelBatch& batch);

}  // namespace driftlabel
