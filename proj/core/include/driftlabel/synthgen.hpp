#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "driftlabel/encoding.hpp"
#include "driftlabel/moments.hpp"

namespace driftlabel {

/// Generative model with known ground truth. Labels are i.i.d. from the class
/// prior; each independent source abstains with probability 1 - r_i, votes the
/// true class with probability a_i, and otherwise votes uniformly over the
/// wrong classes. A dependent child copies its parent's vote verbatim with
/// probability rho and draws independently otherwise.
struct SyntheticSpec {
    int m = 0;
    int k = 2;
    std::vector<double> prior;     // length k, sums to 1
    std::vector<double> accuracy;  // per source, in (0, 1)
    std::vector<double> coverage;  // per source, in (0, 1]

    struct Dependency {
        int parent = 0;
        int child = 0;
        double rho = 0.0;  // copy probability
    };
    std::vector<Dependency> dependencies;

    struct DriftEvent {
        std::size_t batch_index = 0;
        std::vector<double> accuracy;  // replaces the per-source accuracies
    };
    std::vector<DriftEvent> drift;  // sorted by batch_index

    std::uint64_t seed = 0;

    /// Throws InputError on inconsistent sizes, out-of-range values, a child
    /// with two parents, or a dependency cycle. Returns sources in an order
    /// where every parent precedes its children.
    std::vector<int> validate_and_topo_order() const;

    /// Per-source accuracies in effect at a batch index (last drift wins).
    std::vector<double> accuracies_at_batch(std::size_t batch_index) const;
};

struct GeneratedBatch {
    std::vector<int> truth;  // length n, classes 1..k
    LabelBatch batch;
};

/// Draws n examples. Deterministic given (spec.seed, batch_index); distinct
/// batch indices yield independent streams, so chunked generation is stable.
GeneratedBatch generate(const SyntheticSpec& spec, std::size_t n,
                        std::size_t batch_index = 0);

/// Exact E[lambda_i^(c) Y^(c)] under the one-vs-rest encoding; no sampling.
Vector true_mu(const SyntheticSpec& spec, int target_class,
               std::optional<std::size_t> batch_index = std::nullopt);

/// Exact non-abstain probability per source (children inherit through copies).
Vector true_coverage(const SyntheticSpec& spec);

/// Exact p(y | lambda) by evaluation of the generative joint, including
/// dependency copies. Throws TooLargeError for m > 8.
Vector brute_force_posterior(const SyntheticSpec& spec, const IntVector& lambda_vec);

/// Exact population moments (nu, Sigma_O) of the one-vs-rest encoding for
/// class c, by enumeration of the joint. Throws TooLargeError for m > 8.
MomentEstimates population_moments(const SyntheticSpec& spec, int target_class);

}  // namespace driftlabel
