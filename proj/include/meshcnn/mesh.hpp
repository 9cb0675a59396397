#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "meshcnn/geometry.hpp"

namespace meshcnn {

// Immutable triangle mesh: vertex coordinates (model units, millimeters for
// scans), optional per-vertex colors in [0,1], triangle connectivity, and the
// derived edge set (union of the three unordered index pairs of every face,
// deduplicated). Construction validates indices, rejects degenerate faces and
// drops duplicate ones, and builds a CSR neighbor table for ring queries.
// Safe to share across threads once built.
class Mesh {
public:
    Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
         std::vector<Color> colors = {});

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& faces() const { return faces_; }

    bool has_colors() const { return !colors_.empty(); }
    const std::vector<Color>& colors() const { return colors_; }

    // Unordered edge pairs with first < second, sorted.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    // Vertices sharing an edge with v, ascending.
    std::span<const int> neighbors(int v) const {
        return {adj_cols_.data() + adj_offsets_[v],
                adj_cols_.data() + adj_offsets_[v + 1]};
    }

    // True when some incident edge borders fewer than two faces.
    bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }

    void check_vertex_index(int v) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Color> colors_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::int64_t> adj_offsets_;
    std::vector<int> adj_cols_;
    std::vector<std::uint8_t> boundary_vertex_;
};

// Per-vertex binary labels; positive marks the margin band class.
struct VertexLabels {
    std::vector<std::uint8_t> values;

    int positive_count() const;
    std::size_t size() const { return values.size(); }
};

// A vertex counts as positive when its color is saturated enough red:
// r >= threshold and g, b <= 1 - threshold. Throws DataError without colors.
VertexLabels labels_from_colors(const Mesh& mesh, double red_threshold = 0.6);

} // namespace meshcnn
