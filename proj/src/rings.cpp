#include "meshcnn/rings.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "meshcnn/errors.hpp"

namespace meshcnn {

namespace {

constexpr int kUnvisited = std::numeric_limits<int>::min();

// Expands rings 0..max_ring around source and hands each ring to sink as an
// ascending vertex list. Excluding only the previous two rings is enough: a
// vertex of an older ring cannot share an edge with the frontier, so it can
// never be re-reached in one hop.
template <typename Sink>
void expand_rings(const Mesh& mesh, int source, int max_ring, Sink&& sink,
                  std::vector<int>& ring_of, int& epoch_base) {
    // ring_of holds (epoch_base + ring) stamps so repeated calls skip the O(n) clear.
    if (epoch_base > (1 << 30)) {
        std::fill(ring_of.begin(), ring_of.end(), kUnvisited);
        epoch_base = 0;
    }

    std::vector<int> cur = {source};
    ring_of[source] = epoch_base;
    sink(0, cur);

    for (int ring = 1; ring <= max_ring && !cur.empty(); ++ring) {
        std::vector<int> next;
        for (int u : cur) {
            for (int w : mesh.neighbors(u)) {
                const int stamp = ring_of[w];
                if (stamp >= epoch_base + ring - 2 && stamp <= epoch_base + ring) {
                    continue; // in the current or previous two rings
                }
                ring_of[w] = epoch_base + ring;
                next.push_back(w);
            }
        }
        std::sort(next.begin(), next.end());
        sink(ring, next);
        cur = std::move(next);
    }
    epoch_base += max_ring + 3;
}

} // namespace

std::vector<int> ring_neighbors(const Mesh& mesh, int v, int k) {
    mesh.check_vertex_index(v);
    if (k < 0) {
        throw UsageError("ring number must be >= 0, got " + std::to_string(k));
    }
    std::vector<int> result;
    std::vector<int> ring_of(mesh.vertex_count(), kUnvisited);
    int epoch = 0;
    expand_rings(mesh, v, k, [&](int ring, const std::vector<int>& members) {
        if (ring == k) result = members;
    },
                 ring_of, epoch);
    return result;
}

RingAdjacency::RingAdjacency(const Mesh& mesh, std::vector<int> rings)
    : n_(mesh.vertex_count()), rings_(std::move(rings)) {
    if (rings_.empty()) {
        throw UsageError("ring adjacency needs at least one ring number");
    }
    int max_ring = 0;
    for (int r : rings_) {
        if (r < 0) {
            throw UsageError("ring numbers must be >= 0, got " + std::to_string(r));
        }
        max_ring = std::max(max_ring, r);
    }

    slots_.resize(rings_.size());
    for (auto& slot : slots_) {
        slot.offsets.assign(n_ + 1, 0);
    }
    // slot index per ring number, -1 when not requested
    std::vector<int> slot_of(max_ring + 1, -1);
    for (std::size_t s = 0; s < rings_.size(); ++s) {
        if (slot_of[rings_[s]] != -1) {
            throw UsageError("duplicate ring number " + std::to_string(rings_[s]));
        }
        slot_of[rings_[s]] = static_cast<int>(s);
    }

    std::vector<int> ring_of(n_, kUnvisited);
    int epoch = 0;
    for (int v = 0; v < n_; ++v) {
        expand_rings(mesh, v, max_ring, [&](int ring, const std::vector<int>& members) {
            const int s = slot_of[ring];
            if (s < 0) return;
            slots_[s].offsets[v + 1] = static_cast<std::int64_t>(members.size());
            slots_[s].cols.insert(slots_[s].cols.end(), members.begin(), members.end());
        },
                     ring_of, epoch);
    }
    for (auto& slot : slots_) {
        for (int v = 0; v < n_; ++v) slot.offsets[v + 1] += slot.offsets[v];
    }
}

RingAdjacency::RingAdjacency(int vertex_count, std::vector<int> rings,
                             std::vector<CsrSlot> slots)
    : n_(vertex_count), rings_(std::move(rings)), slots_(std::move(slots)) {
    if (rings_.empty() || rings_.size() != slots_.size()) {
        throw DataError("ring adjacency slot count mismatch");
    }
    for (const auto& slot : slots_) {
        if (slot.offsets.size() != static_cast<std::size_t>(n_) + 1 ||
            slot.offsets.front() != 0 ||
            slot.offsets.back() != static_cast<std::int64_t>(slot.cols.size())) {
            throw DataError("ring adjacency CSR offsets are inconsistent");
        }
        for (int v = 0; v < n_; ++v) {
            if (slot.offsets[v + 1] < slot.offsets[v]) {
                throw DataError("ring adjacency CSR offsets are not monotone");
            }
        }
        for (int c : slot.cols) {
            if (c < 0 || c >= n_) {
                throw DataError("ring adjacency CSR column out of range");
            }
        }
    }
}

std::optional<int> RingAdjacency::slot_for_ring(int ring) const {
    for (std::size_t s = 0; s < rings_.size(); ++s) {
        if (rings_[s] == ring) return static_cast<int>(s);
    }
    return std::nullopt;
}

} // namespace meshcnn
