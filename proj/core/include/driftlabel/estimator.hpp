#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftlabel/encoding.hpp"
#include "driftlabel/moments.hpp"
#include "driftlabel/pcp.hpp"
#include "driftlabel/structure.hpp"

namespace driftlabel {

/// Output of the per-batch source-accuracy estimation for one target class.
struct AccuracyEstimate {
    Vector z;         // signed rank-1 factor
    double c = 0.0;   // (1 + z' Sigma_O z) / Sigma_S, positive
    Vector sigma_os;  // Sigma_O z / sqrt(c)
    Vector mu;        // Sigma_OS + E[Y] nu, clamped to [-r_i, r_i]
    std::vector<bool> clamped;

    bool any_clamped() const {
        for (bool b : clamped)
            if (b) return true;
        return false;
    }
};

struct FitConfig {
    double tol = 1e-8;  // sup-norm of the objective gradient
    std::size_t max_iter = 5000;
    int restarts = 5;  // random restarts on cold start
    std::uint64_t seed = 0;
};

struct FitResult {
    Vector z;
    double objective = 0.0;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Minimizes f(z) = sum over masked pairs of (k_inv_ij + z_i z_j)^2 by damped
/// Gauss-Newton with backtracking. With an init the fit is warm-started from
/// it; otherwise it runs seeded random restarts and keeps the best objective.
/// Throws UnderdeterminedError if |mask| < m.
FitResult fit_z_masked(const Matrix& k_inv, const DependencyStructure& structure,
                       std::optional<Vector> init = std::nullopt,
                       const FitConfig& config = {});

/// c = (1 + z' sigma_o z) / sigma_s. Throws NonPositiveCError when c <= 0,
/// which signals a non-PSD covariance estimate.
double estimate_c(const Vector& z, const Matrix& sigma_o, double sigma_s);

/// Completes Algorithm 2: Sigma_OS = sigma_o z / sqrt(c), mu = Sigma_OS + E[Y] nu,
/// componentwise clamped to [-r_i, r_i] with clamp flags recorded.
AccuracyEstimate estimate_mu(const Matrix& sigma_o, const Vector& z, double c,
                             const ClassPrior& prior, const Vector& nu,
                             const Vector& coverage);

/// Bridges the correlation mu_i = E[lambda_i Y] to the conditional accuracy
/// P(lambda_i = Y | lambda_i != 0) = (mu_i + r_i) / (2 r_i).
/// Throws NoCoverageError when r_i = 0.
double correlation_to_accuracy(double mu_i, double r_i);

/// How the edge threshold is chosen on the first batch.
struct ThresholdRule {
    std::optional<double> absolute;  // set -> used as-is
    double auto_fraction = 0.25;     // otherwise fraction of max |S_ij| off-diagonal

    double resolve(const Matrix& s_hat) const {
        return absolute ? *absolute : auto_threshold(s_hat, auto_fraction);
    }
};

struct EstimatorConfig {
    double alpha = 0.05;  // EWMA mixing parameter
    double eps_rel = 1e-6;
    PcpConfig pcp;
    FitConfig fit;
    ThresholdRule threshold;
    std::vector<double> class_prior;  // empty -> uninformative (E[Y] = 0, uniform posterior)
};

/// Streaming state of Algorithm 3. One estimation run per class for k > 2;
/// the binary case collapses to a single run shared by both classes.
struct EstimatorState {
    int num_classes = 0;
    int num_sources = 0;
    double alpha = 0.05;
    std::vector<double> class_prior;           // length k, sums to 1
    std::optional<DependencyStructure> structure;  // fixed after batch 1
    std::size_t batches_seen = 0;
    Vector coverage;              // EWMA of per-batch coverage rates
    std::vector<Vector> mu;       // per run, EWMA of per-batch accuracy correlations
    std::vector<Vector> z;        // per run, last fitted z (warm start)

    int num_runs() const { return num_classes == 2 ? 1 : num_classes; }
    /// Class prior for the one-vs-rest run of class c (1-based) under +-1 encoding.
    ClassPrior run_prior(int target_class) const;

    static EstimatorState fresh(int num_classes, double alpha,
                                std::vector<double> class_prior = {});
};

/// EWMA step: mu := (1 - alpha) mu + alpha mu_b per run; the first batch sets
/// mu directly. Returns the updated state; the input is not modified.
EstimatorState ewma_update(const EstimatorState& state,
                           const std::vector<Vector>& mu_b,
                           const Vector& coverage_b);

struct BatchOutcome {
    EstimatorState state;
    std::vector<AccuracyEstimate> estimates;  // one per run
    bool sign_fallback = false;  // per-component sign rule was needed on batch 1
};

/// Processes one batch through the full pipeline. The first batch learns the
/// dependency structure via PCP and recovers z from the low-rank part; later
/// batches fit z against the fixed mask, warm-started from the previous batch.
/// On error the caller's state is untouched (the input is taken by const ref).
BatchOutcome process_batch(const EstimatorState& state, const LabelBatch& batch,
                           const EstimatorConfig& config);

}  // namespace driftlabel
