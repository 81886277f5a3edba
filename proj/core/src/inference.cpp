#include "driftlabel/inference.hpp"

#include <algorithm>
#include <cmath>

namespace driftlabel {

namespace {
constexpr double kAccFloor = 1e-6;
}

Vector InferenceModel::component_weights(const DependencyStructure& structure) {
    Vector w = Vector::Ones(structure.num_sources);
    for (const auto& comp : structure.components()) {
        for (int i : comp) w(i) = 1.0 / static_cast<double>(comp.size());
    }
    return w;
}

PosteriorLabel posterior(const IntVector& votes, const InferenceModel& model) {
    const int k = model.num_classes;
    const auto m = votes.size();
    PosteriorLabel out;

    bool any_vote = false;
    bool clamped = false;
    Vector logp(k);
    for (int y = 1; y <= k; ++y) logp(y - 1) = std::log(model.prior(y - 1));

    for (Eigen::Index i = 0; i < m; ++i) {
        const int v = votes(i);
        if (v == kAbstain) continue;
        if (model.coverage(i) <= 0.0) continue;  // accuracy undefined, skip
        any_vote = true;
        for (int y = 1; y <= k; ++y) {
            double a = model.accuracy(y - 1, i);
            if (a <= 0.0 || a >= 1.0) {
                a = std::clamp(a, kAccFloor, 1.0 - kAccFloor);
                clamped = true;
            }
            const double lik = v == y ? a : (1.0 - a) / static_cast<double>(k - 1);
            logp(y - 1) += model.weight(i) * std::log(lik);
        }
    }

    if (!any_vote) {
        out.probs = model.prior;
        out.abstained = true;
    } else {
        logp.array() -= logp.maxCoeff();
        out.probs = logp.array().exp();
        out.probs /= out.probs.sum();
        out.clamped_accuracy = clamped;
    }
    out.hard = hard_label(out);
    return out;
}

int hard_label(const PosteriorLabel& p) {
    int best = 1;
    for (int y = 2; y <= p.probs.size(); ++y) {
        if (p.probs(y - 1) > p.probs(best - 1)) best = y;
    }
    return best;
}

}  // namespace driftlabel
