#pragma once

#include <vector>

#include "driftlabel/encoding.hpp"
#include "driftlabel/structure.hpp"

namespace driftlabel {

/// Posterior over the latent label for one example.
struct PosteriorLabel {
    Vector probs;          // length k, non-negative, sums to 1
    int hard = 1;          // argmax class, ties toward the smallest index
    bool abstained = false;  // every source abstained
    bool clamped_accuracy = false;  // some a_i hit the [1e-6, 1-1e-6] clamp
};

/// Everything needed to label examples: per-class conditional accuracies
/// a(c, i) = P(source i correct on the c-vs-rest reduction), source coverage,
/// the class prior, and evidence weights from the dependency graph (each
/// source weighted by 1 / size of its connected component, so correlated
/// sources are averaged instead of double-counted).
struct InferenceModel {
    int num_classes = 0;
    Matrix accuracy;   // k x m
    Vector coverage;   // length m
    Vector prior;      // length k, sums to 1
    Vector weight;     // length m, 1/component size

    static Vector component_weights(const DependencyStructure& structure);
};

/// Eq.-style posterior: probs(y) proportional to
///   prior(y) * prod over voting sources of [a_i(y) if vote = y else (1-a_i(y))/(k-1)]^w_i.
/// All-abstain rows return the prior with abstained = true. Sources with zero
/// coverage are skipped. Accuracies exactly 0 or 1 are clamped with a flag.
PosteriorLabel posterior(const IntVector& votes, const InferenceModel& model);

/// Argmax class of a posterior; ties break toward the smallest class index.
int hard_label(const PosteriorLabel& p);

}  // namespace driftlabel
