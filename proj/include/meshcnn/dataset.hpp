#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "meshcnn/features.hpp"
#include "meshcnn/mesh.hpp"
#include "meshcnn/rings.hpp"
#include "meshcnn/tensor.hpp"

namespace meshcnn {

struct DatasetEntry {
    std::string id;
    Tensor features; // {1, n, m}
    VertexLabels labels;
    std::shared_ptr<const RingAdjacency> adjacency; // null when no rings needed
};

// One split of labeled meshes with precomputed features and ring adjacency.
// Loading goes through the OBJ ingestion path (colors -> labels); features
// and ring rows are cached beside each mesh file, keyed by a content hash,
// the feature selection and the ring list.
class Dataset {
public:
    static Dataset load(const std::filesystem::path& dir, const std::string& split,
                        const FeatureSelection& sel, const std::vector<int>& rings,
                        bool use_cache = true);

    const std::vector<DatasetEntry>& entries() const { return entries_; }
    int size() const { return static_cast<int>(entries_.size()); }
    const std::string& split_name() const { return split_; }

    // Positive / (positive + negative) over all vertices of the split.
    double positive_fraction() const;

private:
    std::string split_;
    std::vector<DatasetEntry> entries_;
};

// CSV with one row per vertex: selected feature columns plus a trailing label
// column when labels are given.
void write_features_csv(const FeatureMatrix& fm, const VertexLabels* labels,
                        const std::filesystem::path& path);

} // namespace meshcnn
