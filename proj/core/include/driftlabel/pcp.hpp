#pragma once

#include <optional>
#include <vector>

#include "driftlabel/encoding.hpp"

namespace driftlabel {

/// Parameters of the sparse + low-rank split
///   min ||L||_* + gamma ||S||_1   s.t.  S - L = M,  L symmetric PSD.
///
/// By default the l1 penalty is applied off the diagonal only, the usual
/// convention for inverse-covariance targets whose diagonal is structurally
/// dense; penalize_diagonal restores the plain full-matrix objective.
struct PcpConfig {
    std::optional<double> gamma;  // l1 weight; defaults to 1/sqrt(m) when unset
    double rho = 1.0;             // augmented-Lagrangian penalty
    double tol = 1e-7;            // relative residual tolerance
    std::size_t max_iter = 1000;
    bool penalize_diagonal = false;

    double gamma_for(Eigen::Index m) const {
        return gamma ? *gamma : 1.0 / std::sqrt(static_cast<double>(m));
    }
};

struct PcpResult {
    Matrix s_hat;
    Matrix l_hat;  // symmetric PSD
    std::size_t iterations = 0;
    double residual = 0.0;  // ||S - L - M||_F / max(1, ||M||_F) at exit
    bool converged = false;
    std::vector<double> objective_trail;  // ||L||_* + gamma ||S||_1 per iteration
};

/// Componentwise sign(x) * max(|x| - tau, 0).
Matrix soft_threshold(const Matrix& x, double tau);

/// Spectral soft threshold of a symmetric matrix: eigenvalue magnitudes are
/// shrunk by tau with signs preserved.
Matrix singular_value_threshold(const Matrix& x, double tau);

/// ADMM solver for the split above. The L-update is the proximal step of the
/// nuclear norm restricted to the PSD cone (eigenvalues shrunk by 1/rho and
/// clipped at zero), the S-update soft-thresholds by gamma/rho, and the scaled
/// dual ascends on the constraint. Iterates are deterministic for fixed inputs.
/// A result with converged == false is still populated with the final iterate.
PcpResult pcp_decompose(const Matrix& m_in, const PcpConfig& config = {});

}  // namespace driftlabel
