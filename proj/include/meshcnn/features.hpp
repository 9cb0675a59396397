#pragma once

#include <string>
#include <vector>

#include "meshcnn/mesh.hpp"

namespace meshcnn {

// Per-vertex discrete curvature estimates. Gaussian from the angle deficit
// over the mixed Voronoi area; mean from half the norm of the cotangent
// Laplace-Beltrami vector, signed by agreement with the area-weighted vertex
// normal; principals from mean +- sqrt(max(mean^2 - gauss, 0)). Units are
// 1/model-unit (1/mm for scans). Vertices whose triangle fan is degenerate
// get zeros and a warning.
struct CurvatureSet {
    std::vector<double> k_max, k_min, k_mean, k_gauss;
};

CurvatureSet curvatures(const Mesh& mesh);

// Mean Euclidean distance from v to its ring-1 neighbors. Isolated vertices
// yield 0 with a warning so dirty scans still flow through.
double mean_neighbor_distance(const Mesh& mesh, int v);

// Which feature groups go into the input matrix. Column layout is fixed:
// (x,y,z | k_max,k_min,k_mean,k_gauss | d), filtered by the flags.
struct FeatureSelection {
    bool coordinates = false;
    bool curvatures = true;
    bool distance = true;

    int column_count() const {
        return (coordinates ? 3 : 0) + (curvatures ? 4 : 0) + (distance ? 1 : 0);
    }
    std::vector<std::string> names() const;
    std::string to_string() const;
    static FeatureSelection parse(const std::string& text);
};

// Row per vertex, column per selected feature, all entries finite.
struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // row-major
    std::vector<std::string> feature_names;

    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
};

// Assembles the selected columns. Coordinates are centered on the mesh
// centroid but keep their scale; curvature columns are clamped to [-50, 50]
// before standardization to tame sliver-triangle spikes; curvature and
// distance columns are z-scored per mesh.
FeatureMatrix assemble_features(const Mesh& mesh, const FeatureSelection& sel);

} // namespace meshcnn
