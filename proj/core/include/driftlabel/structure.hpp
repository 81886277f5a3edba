#pragma once

#include <utility>
#include <vector>

#include "driftlabel/encoding.hpp"

namespace driftlabel {

using SourcePair = std::pair<int, int>;  // unordered, stored with first < second

/// Dependency graph over sources plus its complement mask. Every unordered
/// pair (i, j), i < j, is either an edge or a masked pair, never both.
struct DependencyStructure {
    int num_sources = 0;
    std::vector<SourcePair> edges;  // |S_ij| > threshold
    std::vector<SourcePair> mask;   // the complement (Omega)
    double threshold = 0.0;

    /// Connected components of the edge graph; isolated sources are singletons.
    std::vector<std::vector<int>> components() const;
};

/// All pairs (i, j) with i < j for m sources.
std::vector<SourcePair> all_source_pairs(int m);

/// Thresholds the sparse PCP component into edges: (i,j) is an edge iff
/// |s_hat_ij| > t. The mask is the complement pair set.
DependencyStructure edges_from_sparse(const Matrix& s_hat, double t);

/// Default threshold rule: fraction of the largest off-diagonal magnitude.
double auto_threshold(const Matrix& s_hat, double fraction = 0.25);

/// |z|_i = sqrt(max(L_ii, 0)); small negative diagonal noise is clipped.
Vector recover_abs_z(const Matrix& l_hat);

/// Assigns signs to |z| so that sign(z_i z_j) = sign(-k_inv_ij) on masked
/// pairs, propagating by BFS from the largest |z| entry, then flips the global
/// sign so the implied mean source correlation with the label is positive.
/// Throws SignAmbiguityError when the sign-consistency graph is disconnected.
Vector break_symmetry(const Vector& abs_z, const Matrix& k_inv,
                      const DependencyStructure& structure);

/// Same propagation, but disconnected components are tolerated: the
/// better-than-random flip is applied to each component independently.
Vector resolve_signs_by_component(const Vector& abs_z, const Matrix& k_inv,
                                  const DependencyStructure& structure);

/// Global better-than-random orientation: flips z when the implied source
/// correlations with the label (k_inv^-1 z) sum negative.
Vector orient_better_than_random(Vector z, const Matrix& k_inv);

}  // namespace driftlabel
