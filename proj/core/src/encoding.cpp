#include "driftlabel/encoding.hpp"

namespace driftlabel {

LabelDomain::LabelDomain(int num_classes) : k_(num_classes) {
    if (num_classes < 2) {
        throw InputError("label domain needs k >= 2 classes, got " +
                         std::to_string(num_classes));
    }
}

LabelBatch::LabelBatch(IntMatrix votes, LabelDomain domain, std::size_t batch_index)
    : votes_(std::move(votes)), domain_(domain), batch_index_(batch_index) {}

LabelBatch validate_batch(const IntMatrix& raw, const LabelDomain& domain,
                          std::size_t batch_index) {
    if (raw.rows() < 1 || raw.cols() < 1) {
        throw InputError("empty vote matrix");
    }
    if (raw.cols() < 3) {
        throw TooFewSourcesError(static_cast<std::size_t>(raw.cols()));
    }
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            if (!domain.contains_vote(raw(i, j))) {
                throw OutOfDomainVoteError(static_cast<std::size_t>(i),
                                           static_cast<std::size_t>(j), raw(i, j));
            }
        }
    }
    return LabelBatch(raw, domain, batch_index);
}

EncodedMatrix encode_one_vs_rest(const LabelBatch& batch, int target_class) {
    const int k = batch.domain().num_classes();
    if (target_class < 1 || target_class > k) {
        throw InvalidClassError(target_class, k);
    }
    const IntMatrix& v = batch.votes();
    Matrix out(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            const int vote = v(i, j);
            out(i, j) = vote == kAbstain ? 0.0 : (vote == target_class ? 1.0 : -1.0);
        }
    }
    return EncodedMatrix{std::move(out), target_class};
}

Vector coverage_rates(const LabelBatch& batch) {
    const IntMatrix& v = batch.votes();
    Vector r(v.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        r(j) = static_cast<double>((v.col(j).array() != kAbstain).count()) /
               static_cast<double>(v.rows());
    }
    return r;
}

}  // namespace driftlabel
