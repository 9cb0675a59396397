#pragma once

#include <vector>

#include "meshcnn/features.hpp"
#include "meshcnn/rings.hpp"

namespace meshcnn {

// R x n x m tensor of per-ring mean neighbor features: slot s, row i holds the
// mean feature vector over ring rings[s] of vertex i. A slot for ring 0
// reproduces the input rows exactly; empty rings yield zero rows.
struct ExpandedTensor {
    std::vector<int> rings;
    int n = 0;
    int m = 0;
    std::vector<double> data; // slot-major, then row, then feature

    double at(int slot, int i, int f) const {
        return data[(static_cast<std::size_t>(slot) * n + i) * m + f];
    }
    double& at(int slot, int i, int f) {
        return data[(static_cast<std::size_t>(slot) * n + i) * m + f];
    }
};

// Mean-pools X (n x m, row-major) over every ring slot of adj. Equivalent to
// multiplying by the row-normalized per-ring membership matrix; the dense
// membership tensor is never materialized. Each ring row is accumulated in
// value order, which makes the result independent of vertex numbering (bitwise
// permutation equivariance), not just deterministic.
ExpandedTensor expand(const double* x, int n, int m, const RingAdjacency& adj);
ExpandedTensor expand(const FeatureMatrix& x, const RingAdjacency& adj);

// Core of expand: fills out (slots.size() x n x m) from the listed adjacency
// slots. Used by the network expansion layer as well.
void expand_slots(const double* x, int n, int m, const RingAdjacency& adj,
                  const std::vector<int>& slots, double* out);

// Slot-selects the rings in `wanted`, preserving their order.
// Every wanted ring must be present in c.
ExpandedTensor expand_slice(const ExpandedTensor& c, const std::vector<int>& wanted);

// Adjoint of expand: scatters d_out (R x n x m) back onto d_x (n x m,
// preallocated, accumulated into). Row order is fixed, so results are
// deterministic.
void expand_backward(const double* d_out, int n, int m, const RingAdjacency& adj,
                     double* d_x);

} // namespace meshcnn
