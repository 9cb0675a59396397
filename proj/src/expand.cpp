#include "meshcnn/expand.hpp"

#include <algorithm>
#include <string>

#include "meshcnn/errors.hpp"

namespace meshcnn {

namespace {

// Ring mean of one row. Values are summed in ascending order so the result
// depends only on the multiset of neighbor features, never on their indices.
// Neighbor rows are first copied contiguously so the per-feature sorts run
// out of a small resident block; rows are tiny, so insertion sort wins.
void mean_row(const double* x, int m, std::span<const int> row, double* dst,
              std::vector<double>& scratch) {
    const std::size_t d = row.size();
    if (d == 1) {
        const double* src = x + static_cast<std::size_t>(row[0]) * m;
        for (int f = 0; f < m; ++f) dst[f] = src[f];
        return;
    }
    const double inv = 1.0 / static_cast<double>(d);
    scratch.resize(d * (m + 1));
    double* block = scratch.data();    // d rows of m features
    double* column = block + d * m;    // sort buffer
    for (std::size_t k = 0; k < d; ++k) {
        const double* src = x + static_cast<std::size_t>(row[k]) * m;
        double* out_row = block + k * m;
        for (int f = 0; f < m; ++f) out_row[f] = src[f];
    }
    for (int f = 0; f < m; ++f) {
        if (d <= 24) {
            for (std::size_t k = 0; k < d; ++k) {
                const double val = block[k * m + f];
                std::size_t pos = k;
                while (pos > 0 && column[pos - 1] > val) {
                    column[pos] = column[pos - 1];
                    --pos;
                }
                column[pos] = val;
            }
        } else {
            for (std::size_t k = 0; k < d; ++k) column[k] = block[k * m + f];
            std::sort(column, column + d);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < d; ++k) sum += column[k];
        dst[f] = sum * inv;
    }
}

} // namespace

void expand_slots(const double* x, int n, int m, const RingAdjacency& adj,
                  const std::vector<int>& slots, double* out) {
    std::vector<double> scratch;
    for (std::size_t si = 0; si < slots.size(); ++si) {
        const int s = slots[si];
        for (int i = 0; i < n; ++i) {
            const auto row = adj.row(s, i);
            double* dst = out + (si * static_cast<std::size_t>(n) + i) * m;
            if (row.empty()) {
                for (int f = 0; f < m; ++f) dst[f] = 0.0; // empty ring convention
                continue;
            }
            mean_row(x, m, row, dst, scratch);
        }
    }
}

ExpandedTensor expand(const double* x, int n, int m, const RingAdjacency& adj) {
    if (n != adj.vertex_count()) {
        throw DataError("feature rows (" + std::to_string(n) +
                        ") do not match adjacency vertex count (" +
                        std::to_string(adj.vertex_count()) + ")");
    }
    ExpandedTensor out;
    out.rings = adj.rings();
    out.n = n;
    out.m = m;
    out.data.assign(static_cast<std::size_t>(adj.slot_count()) * n * m, 0.0);

    std::vector<int> all_slots(adj.slot_count());
    for (int s = 0; s < adj.slot_count(); ++s) all_slots[s] = s;
    expand_slots(x, n, m, adj, all_slots, out.data.data());
    return out;
}

ExpandedTensor expand(const FeatureMatrix& x, const RingAdjacency& adj) {
    return expand(x.data.data(), x.rows, x.cols, adj);
}

ExpandedTensor expand_slice(const ExpandedTensor& c, const std::vector<int>& wanted) {
    ExpandedTensor out;
    out.rings = wanted;
    out.n = c.n;
    out.m = c.m;
    out.data.reserve(wanted.size() * static_cast<std::size_t>(c.n) * c.m);
    for (int ring : wanted) {
        int slot = -1;
        for (std::size_t s = 0; s < c.rings.size(); ++s) {
            if (c.rings[s] == ring) {
                slot = static_cast<int>(s);
                break;
            }
        }
        if (slot < 0) {
            throw DataError("requested ring " + std::to_string(ring) +
                            " is not present in the expanded tensor");
        }
        const auto begin = c.data.begin() + static_cast<std::size_t>(slot) * c.n * c.m;
        out.data.insert(out.data.end(), begin, begin + static_cast<std::size_t>(c.n) * c.m);
    }
    return out;
}

void expand_backward(const double* d_out, int n, int m, const RingAdjacency& adj,
                     double* d_x) {
    for (int s = 0; s < adj.slot_count(); ++s) {
        for (int i = 0; i < n; ++i) {
            const auto row = adj.row(s, i);
            if (row.empty()) continue;
            const double inv = 1.0 / static_cast<double>(row.size());
            const double* src = d_out + (static_cast<std::size_t>(s) * n + i) * m;
            for (int j : row) {
                double* dst = d_x + static_cast<std::size_t>(j) * m;
                for (int f = 0; f < m; ++f) dst[f] += inv * src[f];
            }
        }
    }
}

} // namespace meshcnn
