#include "driftlabel/structure.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <deque>

namespace driftlabel {

namespace {

constexpr double kZeroFloor = 1e-8;    // |z| entries below this carry no sign
constexpr double kSignFloor = 1e-12;   // k_inv entries below this carry no sign info

std::vector<std::vector<int>> connected_components(int m,
                                                   const std::vector<SourcePair>& pairs,
                                                   const std::vector<bool>& active) {
    std::vector<std::vector<int>> adj(m);
    for (const auto& [i, j] : pairs) {
        if (active[i] && active[j]) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    std::vector<std::vector<int>> comps;
    std::vector<bool> seen(m, false);
    for (int s = 0; s < m; ++s) {
        if (!active[s] || seen[s]) continue;
        std::vector<int> comp;
        std::deque<int> queue{s};
        seen[s] = true;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            comp.push_back(v);
            for (int w : adj[v]) {
                if (!seen[w]) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

// BFS sign propagation over the informative masked pairs. Components are
// returned over the active (non-negligible |z|) sources.
struct SignAssignment {
    Vector z;
    std::vector<std::vector<int>> components;
};

SignAssignment propagate_signs(const Vector& abs_z, const Matrix& k_inv,
                               const DependencyStructure& structure) {
    const int m = static_cast<int>(abs_z.size());
    std::vector<bool> active(m);
    for (int i = 0; i < m; ++i) active[i] = abs_z(i) > kZeroFloor;

    std::vector<SourcePair> informative;
    informative.reserve(structure.mask.size());
    for (const auto& p : structure.mask) {
        if (std::abs(k_inv(p.first, p.second)) > kSignFloor) informative.push_back(p);
    }
    auto comps = connected_components(m, informative, active);

    Vector sign = Vector::Zero(m);
    std::vector<std::vector<int>> adj(m);
    for (const auto& [i, j] : informative) {
        if (active[i] && active[j]) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (const auto& comp : comps) {
        const int seed = *std::max_element(comp.begin(), comp.end(), [&](int a, int b) {
            return abs_z(a) < abs_z(b);
        });
        sign(seed) = 1.0;
        std::deque<int> queue{seed};
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            for (int w : adj[v]) {
                if (sign(w) == 0.0) {
                    // off the graph, k_inv_ij ~ -z_i z_j
                    sign(w) = sign(v) * (-k_inv(v, w) >= 0.0 ? 1.0 : -1.0);
                    queue.push_back(w);
                }
            }
        }
    }
    return SignAssignment{sign.cwiseProduct(abs_z), std::move(comps)};
}

// Better-than-random convention: orient so that the implied source-label
// covariance Sigma_O z = k_inv^-1 z has positive mass over the given indices.
void apply_global_sign(Vector& z, const Matrix& k_inv,
                       const std::vector<std::vector<int>>& components) {
    if (z.size() == 0 || z.cwiseAbs().maxCoeff() <= kZeroFloor) return;
    const Vector w = Eigen::PartialPivLU<Matrix>(k_inv).solve(z);
    for (const auto& comp : components) {
        double mass = 0.0;
        for (int i : comp) mass += w(i);
        if (mass < 0.0) {
            for (int i : comp) z(i) = -z(i);
        }
    }
}

}  // namespace

std::vector<SourcePair> all_source_pairs(int m) {
    std::vector<SourcePair> pairs;
    pairs.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    return pairs;
}

std::vector<std::vector<int>> DependencyStructure::components() const {
    std::vector<bool> active(num_sources, true);
    return connected_components(num_sources, edges, active);
}

DependencyStructure edges_from_sparse(const Matrix& s_hat, double t) {
    DependencyStructure out;
    out.num_sources = static_cast<int>(s_hat.rows());
    out.threshold = t;
    for (const auto& p : all_source_pairs(out.num_sources)) {
        if (std::abs(s_hat(p.first, p.second)) > t) {
            out.edges.push_back(p);
        } else {
            out.mask.push_back(p);
        }
    }
    return out;
}

double auto_threshold(const Matrix& s_hat, double fraction) {
    const auto m = s_hat.rows();
    double max_off = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            if (i != j) max_off = std::max(max_off, std::abs(s_hat(i, j)));
    return fraction * max_off;
}

Vector recover_abs_z(const Matrix& l_hat) {
    return l_hat.diagonal().array().max(0.0).sqrt();
}

Vector break_symmetry(const Vector& abs_z, const Matrix& k_inv,
                      const DependencyStructure& structure) {
    auto assignment = propagate_signs(abs_z, k_inv, structure);
    if (assignment.components.size() > 1) {
        throw SignAmbiguityError(std::move(assignment.components));
    }
    apply_global_sign(assignment.z, k_inv, assignment.components);
    return assignment.z;
}

Vector resolve_signs_by_component(const Vector& abs_z, const Matrix& k_inv,
                                  const DependencyStructure& structure) {
    auto assignment = propagate_signs(abs_z, k_inv, structure);
    apply_global_sign(assignment.z, k_inv, assignment.components);
    return assignment.z;
}

Vector orient_better_than_random(Vector z, const Matrix& k_inv) {
    if (z.size() == 0 || z.cwiseAbs().maxCoeff() <= kZeroFloor) return z;
    const Vector w = Eigen::PartialPivLU<Matrix>(k_inv).solve(z);
    if (w.sum() < 0.0) z = -z;
    return z;
}

}  // namespace driftlabel
