#pragma once

#include "driftlabel/encoding.hpp"

namespace driftlabel {

/// First and second empirical moments of an encoded batch.
/// sigma_o uses population normalization: Sigma = E E^T / n - nu nu^T
/// with E the m x n matrix whose columns are the encoded vote vectors.
struct MomentEstimates {
    Vector nu;       // labeling rates, column means of the encoding
    Matrix sigma_o;  // m x m symmetric covariance
    std::size_t n;   // example count used
};

/// Class-balance prior under the +-1 encoding. The uninformative default
/// (e_y = 0, sigma_s = 1) is what the pipeline substitutes when nothing is known.
struct ClassPrior {
    double e_y = 0.0;
    double sigma_s = 1.0;

    static ClassPrior uninformative() { return ClassPrior{}; }
    static ClassPrior from_class_probability(double p_class) {
        const double ey = 2.0 * p_class - 1.0;
        return ClassPrior{ey, 1.0 - ey * ey};
    }
};

/// Column means of the encoded votes; abstains count as zero.
Vector labeling_rates(const EncodedMatrix& encoded);

/// Population covariance of the encoded votes. Throws DegenerateBatchError if q < 2.
MomentEstimates covariance(const EncodedMatrix& encoded);

/// (sigma + delta I)^-1 via spectral decomposition, with
/// delta = eps_rel * trace(sigma) / m applied only when the smallest eigenvalue
/// falls below it. Throws NotInvertibleError when the condition estimate of the
/// shifted matrix exceeds 1e14.
Matrix regularized_inverse(const Matrix& sigma, double eps_rel = 1e-6);

}  // namespace driftlabel
