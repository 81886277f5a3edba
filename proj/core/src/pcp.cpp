#include "driftlabel/pcp.hpp"

#include <Eigen/Eigenvalues>

namespace driftlabel {

Matrix soft_threshold(const Matrix& x, double tau) {
    return x.array().sign() * (x.array().abs() - tau).max(0.0);
}

Matrix singular_value_threshold(const Matrix& x, double tau) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    const Vector shrunk =
        es.eigenvalues().array().sign() * (es.eigenvalues().array().abs() - tau).max(0.0);
    Matrix out = es.eigenvectors() * shrunk.asDiagonal() * es.eigenvectors().transpose();
    return ((out + out.transpose()) * 0.5).eval();
}

namespace {

// Proximal step of ||.||_* + indicator(PSD): shrink eigenvalues by tau, clip at 0.
// Also reports the nuclear norm of the result (= eigenvalue sum, L is PSD).
Matrix psd_nuclear_prox(const Matrix& x, double tau, double& nuclear_out) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    const Vector shrunk = (es.eigenvalues().array() - tau).max(0.0);
    nuclear_out = shrunk.sum();
    Matrix out = es.eigenvectors() * shrunk.asDiagonal() * es.eigenvectors().transpose();
    return ((out + out.transpose()) * 0.5).eval();
}

}  // namespace

PcpResult pcp_decompose(const Matrix& m_in, const PcpConfig& config) {
    const auto m = m_in.rows();
    const double gamma = config.gamma_for(m);
    double rho = config.rho;
    const double rho_min = config.rho * 1e-4;
    const double rho_max = config.rho * 1e4;
    const double scale = std::max(1.0, m_in.norm());

    Matrix weight = Matrix::Constant(m, m, gamma);
    if (!config.penalize_diagonal) weight.diagonal().setZero();

    PcpResult res;
    // feasible start: S = M, L = 0
    Matrix s = m_in;
    Matrix l = Matrix::Zero(m, m);
    Matrix u = Matrix::Zero(m, m);

    double primal = s.norm() > 0 ? 1.0 : 0.0;
    res.objective_trail.reserve(std::min<std::size_t>(config.max_iter, 4096));
    for (std::size_t it = 1; it <= config.max_iter; ++it) {
        const Matrix l_old = l;
        double nuclear = 0.0;
        l = psd_nuclear_prox(s - m_in + u, 1.0 / rho, nuclear);
        const Matrix t = l + m_in - u;
        s = t.array().sign() * (t.array().abs() - weight.array() / rho).max(0.0);
        const Matrix r = s - l - m_in;
        u += r;

        const double primal_abs = r.norm();
        const double dual_abs = rho * (l - l_old).norm();
        primal = primal_abs / scale;
        res.objective_trail.push_back(nuclear + (weight.array() * s.array().abs()).sum());
        res.iterations = it;
        if (primal <= config.tol && dual_abs / scale <= config.tol) {
            res.converged = true;
            break;
        }
        // residual balancing; the scaled dual must shrink when rho grows
        if (it % 5 == 0) {
            if (primal_abs > 5.0 * dual_abs && rho * 2.0 <= rho_max) {
                rho *= 2.0;
                u /= 2.0;
            } else if (dual_abs > 5.0 * primal_abs && rho * 0.5 >= rho_min) {
                rho *= 0.5;
                u *= 2.0;
            }
        }
    }
    res.residual = primal;
    res.s_hat = std::move(s);
    res.l_hat = std::move(l);
    return res;
}

}  // namespace driftlabel
