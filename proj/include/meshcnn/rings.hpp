#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "meshcnn/mesh.hpp"

namespace meshcnn {

// Ring-k neighborhood of v: ring 0 is {v}, ring 1 its direct neighbors, and
// ring k expands the previous ring while excluding the two rings before it —
// on an undirected graph that exclusion is enough to make ring k exactly the
// vertices at graph distance k. Returned ascending; empty when the component
// runs out.
std::vector<int> ring_neighbors(const Mesh& mesh, int v, int k);

// Sparse per-ring membership: slot s holds, for every vertex i, the ascending
// list of vertices in ring rings[s] of i (compressed sparse rows, one matrix
// per slot). Ring numbers may be non-contiguous, e.g. {0,4,8}. Immutable
// after construction and safe to share across threads.
class RingAdjacency {
public:
    struct CsrSlot {
        std::vector<std::int64_t> offsets; // size n+1, non-decreasing
        std::vector<int> cols;             // ascending within each row
    };

    RingAdjacency(const Mesh& mesh, std::vector<int> rings);

    // Rebuild from precomputed rows (cache path). Throws DataError when the
    // CSR structure is inconsistent.
    RingAdjacency(int vertex_count, std::vector<int> rings, std::vector<CsrSlot> slots);

    int vertex_count() const { return n_; }
    const std::vector<int>& rings() const { return rings_; }
    int slot_count() const { return static_cast<int>(rings_.size()); }

    std::optional<int> slot_for_ring(int ring) const;

    std::span<const int> row(int slot, int v) const {
        const Slot& s = slots_[slot];
        return {s.cols.data() + s.offsets[v], s.cols.data() + s.offsets[v + 1]};
    }

    std::int64_t row_size(int slot, int v) const {
        return slots_[slot].offsets[v + 1] - slots_[slot].offsets[v];
    }

private:
    using Slot = CsrSlot;

    int n_ = 0;
    std::vector<int> rings_;
    std::vector<Slot> slots_;
};

} // namespace meshcnn
