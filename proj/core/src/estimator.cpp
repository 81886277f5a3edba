#include "driftlabel/estimator.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

#include "driftlabel/rng.hpp"

namespace driftlabel {

namespace {

double masked_objective(const Matrix& k_inv, const std::vector<SourcePair>& mask,
                        const Vector& z) {
    double f = 0.0;
    for (const auto& [i, j] : mask) {
        const double r = k_inv(i, j) + z(i) * z(j);
        f += r * r;
    }
    return f;
}

FitResult fit_from(const Matrix& k_inv, const std::vector<SourcePair>& mask,
                   Vector z, const FitConfig& config) {
    const auto m = z.size();
    FitResult out;
    double f = masked_objective(k_inv, mask, z);
    double damping = 1e-4;

    // Gauss-Newton on the residuals r_ij = k_inv_ij + z_i z_j, damped by an
    // LM-style lambda, plus the exact second-order term (the residuals enter
    // the Hessian linearly), which keeps convergence quadratic at non-zero
    // residual minima where plain Gauss-Newton plateaus.
    Vector grad(m);
    Matrix hess(m, m);
    std::size_t it = 0;
    for (; it < config.max_iter; ++it) {
        grad.setZero();
        hess.setZero();
        for (const auto& [i, j] : mask) {
            const double r = k_inv(i, j) + z(i) * z(j);
            grad(i) += 2.0 * r * z(j);
            grad(j) += 2.0 * r * z(i);
            hess(i, i) += z(j) * z(j);
            hess(j, j) += z(i) * z(i);
            hess(i, j) += z(i) * z(j) + r;
            hess(j, i) += z(i) * z(j) + r;
        }
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= config.tol) {
            out.converged = true;
            break;
        }

        const double scale = std::max(hess.cwiseAbs().maxCoeff(), 1e-12);
        bool moved = false;
        for (int attempt = 0; attempt < 40 && !moved; ++attempt) {
            const Matrix h = hess + damping * scale * Matrix::Identity(m, m);
            const Vector dir = Eigen::LDLT<Matrix>(h).solve(-0.5 * grad);
            const double slope = grad.dot(dir);
            if (!dir.allFinite() || slope >= 0.0) {
                damping *= 10.0;  // indefinite curvature; push toward gradient descent
                continue;
            }
            // Armijo with an eps-scale slack so full steps stay acceptable once
            // f differences drop below rounding
            const double noise =
                4.0 * std::numeric_limits<double>::epsilon() * (1.0 + f);
            double step = 1.0;
            for (int ls = 0; ls < 60; ++ls) {
                const Vector cand = z + step * dir;
                const double fc = masked_objective(k_inv, mask, cand);
                if (fc <= f + 1e-4 * step * slope + noise) {
                    z = cand;
                    f = fc;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (moved) {
                damping = std::max(damping / 3.0, 1e-12);
            } else {
                damping *= 10.0;
            }
        }
        if (!moved) break;  // no descent possible at any damping
    }
    out.iterations = it;
    out.objective = f;
    out.z = std::move(z);

    // final gradient for reporting
    Vector grad_final = Vector::Zero(m);
    for (const auto& [i, j] : mask) {
        const double r = k_inv(i, j) + out.z(i) * out.z(j);
        grad_final(i) += 2.0 * r * out.z(j);
        grad_final(j) += 2.0 * r * out.z(i);
    }
    out.grad_norm = grad_final.lpNorm<Eigen::Infinity>();
    out.converged = out.grad_norm <= config.tol;
    return out;
}

}  // namespace

FitResult fit_z_masked(const Matrix& k_inv, const DependencyStructure& structure,
                       std::optional<Vector> init, const FitConfig& config) {
    const auto m = k_inv.rows();
    if (structure.mask.size() < static_cast<std::size_t>(m)) {
        throw UnderdeterminedError(structure.mask.size(), static_cast<std::size_t>(m));
    }

    if (init) {
        if (init->size() != m) {
            throw LengthMismatchError(static_cast<std::size_t>(init->size()),
                                      static_cast<std::size_t>(m));
        }
        return fit_from(k_inv, structure.mask, *std::move(init), config);
    }

    // cold start: seeded random restarts scaled to the off-diagonal magnitude
    double off_sum = 0.0;
    for (const auto& [i, j] : structure.mask) off_sum += std::abs(k_inv(i, j));
    const double scale =
        std::sqrt(std::max(off_sum / std::max<std::size_t>(structure.mask.size(), 1), 1e-12));

    SplitRng rng(config.seed, 0x5eedf17);
    FitResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < std::max(config.restarts, 1); ++attempt) {
        Vector z0(m);
        for (Eigen::Index i = 0; i < m; ++i) z0(i) = rng.next_gaussian();
        z0 *= scale / std::max(z0.norm(), 1e-12);
        FitResult r = fit_from(k_inv, structure.mask, std::move(z0), config);
        if (r.objective < best.objective) best = std::move(r);
    }
    return best;
}

double estimate_c(const Vector& z, const Matrix& sigma_o, double sigma_s) {
    const double c = (1.0 + z.dot(sigma_o * z)) / sigma_s;
    if (c <= 0.0) throw NonPositiveCError(c);
    return c;
}

AccuracyEstimate estimate_mu(const Matrix& sigma_o, const Vector& z, double c,
                             const ClassPrior& prior, const Vector& nu,
                             const Vector& coverage) {
    if (c <= 0.0) throw NonPositiveCError(c);
    AccuracyEstimate out;
    out.z = z;
    out.c = c;
    out.sigma_os = sigma_o * z / std::sqrt(c);
    Vector mu = out.sigma_os + prior.e_y * nu;
    out.clamped.assign(mu.size(), false);
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        const double r = coverage(i);
        if (mu(i) > r) {
            mu(i) = r;
            out.clamped[i] = true;
        } else if (mu(i) < -r) {
            mu(i) = -r;
            out.clamped[i] = true;
        }
    }
    out.mu = std::move(mu);
    return out;
}

double correlation_to_accuracy(double mu_i, double r_i) {
    if (r_i <= 0.0) throw NoCoverageError(0);
    const double a = (mu_i + r_i) / (2.0 * r_i);
    return std::clamp(a, 0.0, 1.0);
}

ClassPrior EstimatorState::run_prior(int target_class) const {
    if (class_prior.empty()) return ClassPrior::uninformative();
    return ClassPrior::from_class_probability(class_prior[target_class - 1]);
}

EstimatorState EstimatorState::fresh(int num_classes, double alpha,
                                     std::vector<double> class_prior) {
    if (num_classes < 2) {
        throw InputError("estimator needs k >= 2 classes");
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw InputError("alpha must lie in [0, 1]");
    }
    if (!class_prior.empty() && class_prior.size() != static_cast<std::size_t>(num_classes)) {
        throw LengthMismatchError(class_prior.size(), num_classes);
    }
    EstimatorState s;
    s.num_classes = num_classes;
    s.alpha = alpha;
    s.class_prior = std::move(class_prior);
    return s;
}

EstimatorState ewma_update(const EstimatorState& state, const std::vector<Vector>& mu_b,
                           const Vector& coverage_b) {
    if (mu_b.size() != static_cast<std::size_t>(state.num_runs())) {
        throw LengthMismatchError(mu_b.size(), state.num_runs());
    }
    EstimatorState next = state;
    if (state.batches_seen == 0) {
        next.mu = mu_b;
        next.coverage = coverage_b;
    } else {
        const double a = state.alpha;
        for (std::size_t r = 0; r < mu_b.size(); ++r) {
            next.mu[r] = (1.0 - a) * state.mu[r] + a * mu_b[r];
        }
        next.coverage = (1.0 - a) * state.coverage + a * coverage_b;
    }
    next.batches_seen = state.batches_seen + 1;
    return next;
}

BatchOutcome process_batch(const EstimatorState& state, const LabelBatch& batch,
                           const EstimatorConfig& config) {
    const int k = batch.domain().num_classes();
    const int m = static_cast<int>(batch.num_sources());
    if (state.batches_seen > 0) {
        if (k != state.num_classes) throw InputError("class count changed mid-stream");
        if (m != state.num_sources) {
            throw LengthMismatchError(static_cast<std::size_t>(m), state.num_sources);
        }
    } else if (k != state.num_classes) {
        throw InputError("batch class count does not match the estimator state");
    }

    const bool first = state.batches_seen == 0;
    const int runs = state.num_runs();
    const Vector coverage = coverage_rates(batch);

    BatchOutcome outcome{state, {}, false};
    outcome.state.num_sources = m;
    std::vector<Vector> mu_b(runs);
    std::vector<Vector> z_new(runs);

    DependencyStructure structure;
    if (!first) structure = *state.structure;

    for (int run = 0; run < runs; ++run) {
        const int target_class = run + 1;
        const EncodedMatrix enc = encode_one_vs_rest(batch, target_class);
        const MomentEstimates mom = covariance(enc);
        const Matrix k_inv = regularized_inverse(mom.sigma_o, config.eps_rel);
        const ClassPrior prior = state.run_prior(target_class);

        Vector z;
        if (first) {
            const PcpResult pcp = pcp_decompose(k_inv, config.pcp);
            if (!pcp.converged) {
                throw NoConvergenceError("pcp_decompose", pcp.iterations, pcp.residual);
            }
            if (run == 0) {
                // Class-1 encoding fixes the graph for the whole stream.
                structure = edges_from_sparse(pcp.s_hat, config.threshold.resolve(pcp.s_hat));
                outcome.state.structure = structure;
            }
            const Vector abs_z = recover_abs_z(pcp.l_hat);
            try {
                z = break_symmetry(abs_z, k_inv, structure);
            } catch (const SignAmbiguityError&) {
                z = resolve_signs_by_component(abs_z, k_inv, structure);
                outcome.sign_fallback = true;
            }
        } else {
            // a zero z is a stationary point of the masked objective; cold-start
            // instead of warm-starting from it
            std::optional<Vector> init;
            if (state.z[run].lpNorm<Eigen::Infinity>() > 1e-8) init = state.z[run];
            FitResult fit = fit_z_masked(k_inv, structure, init, config.fit);
            if (!fit.converged) {
                throw NoConvergenceError("fit_z_masked", fit.iterations, fit.grad_norm);
            }
            z = std::move(fit.z);
            // the masked objective is sign-symmetric; stay on the warm-start branch,
            // or fall back to the better-than-random convention after a cold start
            if (init) {
                if (z.dot(*init) < 0.0) z = -z;
            } else {
                z = orient_better_than_random(std::move(z), k_inv);
            }
        }

        const double c = estimate_c(z, mom.sigma_o, prior.sigma_s);
        AccuracyEstimate est = estimate_mu(mom.sigma_o, z, c, prior, mom.nu, coverage);
        mu_b[run] = est.mu;
        z_new[run] = est.z;
        outcome.estimates.push_back(std::move(est));
    }

    outcome.state = ewma_update(outcome.state, mu_b, coverage);
    outcome.state.z = std::move(z_new);
    return outcome;
}

}  // namespace driftlabel
