#include "driftlabel/moments.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

namespace driftlabel {

Vector labeling_rates(const EncodedMatrix& encoded) {
    return encoded.values.colwise().mean();
}

MomentEstimates covariance(const EncodedMatrix& encoded) {
    const auto q = encoded.values.rows();
    if (q < 2) {
        throw DegenerateBatchError(static_cast<std::size_t>(q));
    }
    Vector nu = labeling_rates(encoded);
    Matrix sigma = encoded.values.transpose() * encoded.values / static_cast<double>(q) -
                   nu * nu.transpose();
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();
    return MomentEstimates{std::move(nu), std::move(sigma), static_cast<std::size_t>(q)};
}

Matrix regularized_inverse(const Matrix& sigma, double eps_rel) {
    const auto m = sigma.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    const Vector& w = es.eigenvalues();

    double delta = eps_rel * sigma.trace() / static_cast<double>(m);
    if (w.minCoeff() >= delta) {
        delta = 0.0;
    }
    const Vector ws = w.array() + delta;
    const double wmax = ws.cwiseAbs().maxCoeff();
    const double wmin = ws.cwiseAbs().minCoeff();
    if (wmin == 0.0 || wmax / wmin > 1e14) {
        throw NotInvertibleError(wmin == 0.0 ? std::numeric_limits<double>::infinity()
                                             : wmax / wmin);
    }
    Matrix inv = es.eigenvectors() * ws.cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
    return ((inv + inv.transpose()) * 0.5).eval();
}

}  // namespace driftlabel
