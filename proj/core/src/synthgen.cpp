#include "driftlabel/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "driftlabel/rng.hpp"

namespace driftlabel {

namespace {

constexpr std::size_t kEnumBound = 8;

// P(vote = v | Y = y) for an independent draw of one source.
double vote_prob(int v, int y, double a, double r, int k) {
    if (v == kAbstain) return 1.0 - r;
    if (v == y) return r * a;
    return r * (1.0 - a) / static_cast<double>(k - 1);
}

// per-source parent index, -1 for roots
std::vector<int> parent_of(const SyntheticSpec& spec) {
    std::vector<int> parent(spec.m, -1);
    for (const auto& d : spec.dependencies) parent[d.child] = d.parent;
    return parent;
}

std::vector<double> rho_of(const SyntheticSpec& spec) {
    std::vector<double> rho(spec.m, 0.0);
    for (const auto& d : spec.dependencies) rho[d.child] = d.rho;
    return rho;
}

}  // namespace

std::vector<int> SyntheticSpec::validate_and_topo_order() const {
    if (m < 1) throw InputError("synthetic spec needs m >= 1 sources");
    if (k < 2) throw InputError("synthetic spec needs k >= 2 classes");
    if (prior.size() != static_cast<std::size_t>(k)) {
        throw LengthMismatchError(prior.size(), k);
    }
    double psum = 0.0;
    for (double p : prior) {
        if (p < 0.0) throw InputError("class prior entries must be non-negative");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw InputError("class prior must sum to 1");
    if (accuracy.size() != static_cast<std::size_t>(m)) {
        throw LengthMismatchError(accuracy.size(), m);
    }
    if (coverage.size() != static_cast<std::size_t>(m)) {
        throw LengthMismatchError(coverage.size(), m);
    }
    for (double a : accuracy) {
        if (a < 0.0 || a > 1.0) throw InputError("accuracies must lie in [0, 1]");
    }
    for (double r : coverage) {
        if (r < 0.0 || r > 1.0) throw InputError("coverages must lie in [0, 1]");
    }
    std::vector<int> parent(m, -1);
    for (const auto& d : dependencies) {
        if (d.parent < 0 || d.parent >= m || d.child < 0 || d.child >= m ||
            d.parent == d.child) {
            throw InputError("bad dependency pair");
        }
        if (d.rho < 0.0 || d.rho > 1.0) throw InputError("copy probability outside [0, 1]");
        if (parent[d.child] != -1) throw InputError("a child may copy only one parent");
        parent[d.child] = d.parent;
    }
    for (const auto& ev : drift) {
        if (ev.accuracy.size() != static_cast<std::size_t>(m)) {
            throw LengthMismatchError(ev.accuracy.size(), m);
        }
        for (double a : ev.accuracy) {
            if (a < 0.0 || a > 1.0) throw InputError("drift accuracies must lie in [0, 1]");
        }
    }

    // Kahn's algorithm, smallest index first for a stable order.
    std::vector<int> order;
    std::vector<bool> placed(m, false);
    for (int round = 0; round < m; ++round) {
        bool progress = false;
        for (int i = 0; i < m; ++i) {
            if (placed[i]) continue;
            if (parent[i] == -1 || placed[parent[i]]) {
                order.push_back(i);
                placed[i] = true;
                progress = true;
            }
        }
        if (static_cast<int>(order.size()) == m) break;
        if (!progress) throw InputError("dependency cycle detected");
    }
    return order;
}

std::vector<double> SyntheticSpec::accuracies_at_batch(std::size_t batch_index) const {
    std::vector<double> a = accuracy;
    for (const auto& ev : drift) {
        if (ev.batch_index <= batch_index) a = ev.accuracy;
    }
    return a;
}

GeneratedBatch generate(const SyntheticSpec& spec, std::size_t n,
                        std::size_t batch_index) {
    const auto order = spec.validate_and_topo_order();
    const auto parent = parent_of(spec);
    const auto rho = rho_of(spec);
    const auto acc = spec.accuracies_at_batch(batch_index);
    SplitRng rng(spec.seed, batch_index);

    std::vector<int> truth(n);
    IntMatrix votes(n, spec.m);
    for (std::size_t t = 0; t < n; ++t) {
        const int y = rng.next_index(spec.prior) + 1;
        truth[t] = y;
        for (int i : order) {
            if (parent[i] >= 0 && rng.next_double() < rho[i]) {
                votes(t, i) = votes(t, parent[i]);
                continue;
            }
            if (rng.next_double() >= spec.coverage[i]) {
                votes(t, i) = kAbstain;
            } else if (rng.next_double() < acc[i]) {
                votes(t, i) = y;
            } else {
                int w = static_cast<int>(rng.next_below(spec.k - 1)) + 1;
                if (w >= y) ++w;
                votes(t, i) = w;
            }
        }
    }
    LabelBatch batch(std::move(votes), LabelDomain(spec.k), batch_index);
    return GeneratedBatch{std::move(truth), std::move(batch)};
}

Vector true_mu(const SyntheticSpec& spec, int target_class,
               std::optional<std::size_t> batch_index) {
    const auto order = spec.validate_and_topo_order();
    if (target_class < 1 || target_class > spec.k) {
        throw InvalidClassError(target_class, spec.k);
    }
    const auto parent = parent_of(spec);
    const auto rho = rho_of(spec);
    const auto acc = batch_index ? spec.accuracies_at_batch(*batch_index) : spec.accuracy;

    auto independent_mu = [&](int i) {
        double mu = 0.0;
        for (int y = 1; y <= spec.k; ++y) {
            const double pi_c = target_class == y
                                    ? acc[i]
                                    : (1.0 - acc[i]) / static_cast<double>(spec.k - 1);
            const double sign_y = y == target_class ? 1.0 : -1.0;
            mu += spec.prior[y - 1] * sign_y * spec.coverage[i] * (2.0 * pi_c - 1.0);
        }
        return mu;
    };

    Vector mu(spec.m);
    for (int i : order) {
        const double own = independent_mu(i);
        mu(i) = parent[i] >= 0 ? rho[i] * mu(parent[i]) + (1.0 - rho[i]) * own : own;
    }
    return mu;
}

Vector true_coverage(const SyntheticSpec& spec) {
    const auto order = spec.validate_and_topo_order();
    const auto parent = parent_of(spec);
    const auto rho = rho_of(spec);
    Vector r(spec.m);
    for (int i : order) {
        r(i) = parent[i] >= 0 ? rho[i] * r(parent[i]) + (1.0 - rho[i]) * spec.coverage[i]
                              : spec.coverage[i];
    }
    return r;
}

namespace {

// p(lambda | y) factorized along the copy forest.
double pattern_likelihood(const SyntheticSpec& spec, const std::vector<int>& parent,
                          const std::vector<double>& rho, const IntVector& lambda,
                          int y) {
    double p = 1.0;
    for (int i = 0; i < spec.m; ++i) {
        const double ind = vote_prob(lambda(i), y, spec.accuracy[i], spec.coverage[i], spec.k);
        if (parent[i] < 0) {
            p *= ind;
        } else {
            const double copied = lambda(i) == lambda(parent[i]) ? rho[i] : 0.0;
            p *= copied + (1.0 - rho[i]) * ind;
        }
    }
    return p;
}

}  // namespace

Vector brute_force_posterior(const SyntheticSpec& spec, const IntVector& lambda_vec) {
    spec.validate_and_topo_order();
    if (spec.m > static_cast<int>(kEnumBound)) {
        throw TooLargeError(static_cast<std::size_t>(spec.m), kEnumBound);
    }
    if (lambda_vec.size() != spec.m) {
        throw LengthMismatchError(static_cast<std::size_t>(lambda_vec.size()), spec.m);
    }
    const auto parent = parent_of(spec);
    const auto rho = rho_of(spec);

    Vector joint(spec.k);
    for (int y = 1; y <= spec.k; ++y) {
        joint(y - 1) =
            spec.prior[y - 1] * pattern_likelihood(spec, parent, rho, lambda_vec, y);
    }
    const double total = joint.sum();
    if (total <= 0.0) {
        // impossible pattern under the model; fall back to the prior
        Vector p(spec.k);
        for (int y = 0; y < spec.k; ++y) p(y) = spec.prior[y];
        return p;
    }
    return joint / total;
}

MomentEstimates population_moments(const SyntheticSpec& spec, int target_class) {
    spec.validate_and_topo_order();
    if (spec.m > static_cast<int>(kEnumBound)) {
        throw TooLargeError(static_cast<std::size_t>(spec.m), kEnumBound);
    }
    if (target_class < 1 || target_class > spec.k) {
        throw InvalidClassError(target_class, spec.k);
    }
    const auto parent = parent_of(spec);
    const auto rho = rho_of(spec);

    Vector nu = Vector::Zero(spec.m);
    Matrix second = Matrix::Zero(spec.m, spec.m);

    IntVector lambda = IntVector::Zero(spec.m);
    Vector enc(spec.m);
    while (true) {
        for (int i = 0; i < spec.m; ++i) {
            const int v = lambda(i);
            enc(i) = v == kAbstain ? 0.0 : (v == target_class ? 1.0 : -1.0);
        }
        double p = 0.0;
        for (int y = 1; y <= spec.k; ++y) {
            p += spec.prior[y - 1] * pattern_likelihood(spec, parent, rho, lambda, y);
        }
        if (p > 0.0) {
            nu += p * enc;
            second += p * enc * enc.transpose();
        }
        // odometer over {0..k}^m
        int pos = 0;
        while (pos < spec.m) {
            if (++lambda(pos) <= spec.k) break;
            lambda(pos) = 0;
            ++pos;
        }
        if (pos == spec.m) break;
    }
    Matrix sigma = second - nu * nu.transpose();
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();
    return MomentEstimates{std::move(nu), std::move(sigma), 0};
}

}  // namespace driftlabel
