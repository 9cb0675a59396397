#include "meshcnn/mesh.hpp"

#include <algorithm>
#include <string>

#include "meshcnn/errors.hpp"
#include "meshcnn/logging.hpp"

namespace meshcnn {

namespace {

std::array<int, 3> sorted_triple(const std::array<int, 3>& f) {
    std::array<int, 3> s = f;
    std::sort(s.begin(), s.end());
    return s;
}

} // namespace

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
           std::vector<Color> colors)
    : vertices_(std::move(vertices)), colors_(std::move(colors)) {
    const int n = vertex_count();
    if (!colors_.empty() && colors_.size() != vertices_.size()) {
        throw DataError("color count " + std::to_string(colors_.size()) +
                        " does not match vertex count " + std::to_string(n));
    }

    faces_.reserve(faces.size());
    std::vector<std::array<int, 3>> seen;
    seen.reserve(faces.size());
    bool warned_duplicates = false;
    for (const auto& f : faces) {
        for (int idx : f) {
            if (idx < 0 || idx >= n) {
                throw DataError("face index " + std::to_string(idx) +
                                " out of range [0," + std::to_string(n) + ")");
            }
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            throw DataError("degenerate face with repeated vertex index " +
                            std::to_string(f[0]) + "," + std::to_string(f[1]) + "," +
                            std::to_string(f[2]));
        }
        seen.push_back(sorted_triple(f));
        faces_.push_back(f);
    }

    // Duplicate faces (same vertex set, any orientation) are dropped, keeping
    // the first occurrence.
    std::vector<std::size_t> order(seen.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return seen[a] != seen[b] ? seen[a] < seen[b] : a < b;
    });
    std::vector<std::uint8_t> drop(seen.size(), 0);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (seen[order[i]] == seen[order[i - 1]]) {
            drop[order[i]] = 1;
            if (!warned_duplicates) {
                logging::warn("duplicate faces found; keeping first occurrence");
                warned_duplicates = true;
            }
        }
    }
    if (warned_duplicates) {
        std::vector<std::array<int, 3>> kept;
        kept.reserve(faces_.size());
        for (std::size_t i = 0; i < faces_.size(); ++i) {
            if (!drop[i]) kept.push_back(faces_[i]);
        }
        faces_ = std::move(kept);
    }

    edges_.reserve(faces_.size() * 3);
    for (const auto& f : faces_) {
        for (int k = 0; k < 3; ++k) {
            int a = f[k];
            int b = f[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edges_.emplace_back(a, b);
        }
    }
    std::sort(edges_.begin(), edges_.end());
    std::vector<int> edge_faces;
    {
        std::vector<std::pair<int, int>> unique_edges;
        unique_edges.reserve(edges_.size());
        for (const auto& e : edges_) {
            if (unique_edges.empty() || unique_edges.back() != e) {
                unique_edges.push_back(e);
                edge_faces.push_back(1);
            } else {
                ++edge_faces.back();
            }
        }
        edges_ = std::move(unique_edges);
    }

    adj_offsets_.assign(n + 1, 0);
    for (const auto& [a, b] : edges_) {
        ++adj_offsets_[a + 1];
        ++adj_offsets_[b + 1];
    }
    for (int v = 0; v < n; ++v) adj_offsets_[v + 1] += adj_offsets_[v];
    adj_cols_.resize(edges_.size() * 2);
    {
        std::vector<std::int64_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
        for (const auto& [a, b] : edges_) {
            adj_cols_[cursor[a]++] = b;
            adj_cols_[cursor[b]++] = a;
        }
    }
    for (int v = 0; v < n; ++v) {
        std::sort(adj_cols_.begin() + adj_offsets_[v], adj_cols_.begin() + adj_offsets_[v + 1]);
    }

    boundary_vertex_.assign(n, 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edge_faces[e] < 2) {
            boundary_vertex_[edges_[e].first] = 1;
            boundary_vertex_[edges_[e].second] = 1;
        }
    }
}

void Mesh::check_vertex_index(int v) const {
    if (v < 0 || v >= vertex_count()) {
        throw DataError("vertex index " + std::to_string(v) + " out of range [0," +
                        std::to_string(vertex_count()) + ")");
    }
}

int VertexLabels::positive_count() const {
    int count = 0;
    for (auto v : values) count += v;
    return count;
}

VertexLabels labels_from_colors(const Mesh& mesh, double red_threshold) {
    if (!mesh.has_colors()) {
        throw DataError("mesh has no vertex colors to derive labels from");
    }
    VertexLabels labels;
    labels.values.resize(mesh.colors().size());
    const double off = 1.0 - red_threshold;
    for (std::size_t i = 0; i < mesh.colors().size(); ++i) {
        const Color& c = mesh.colors()[i];
        labels.values[i] =
            (c.r >= red_threshold && c.g <= off && c.b <= off) ? 1 : 0;
    }
    return labels;
}

} // namespace meshcnn
