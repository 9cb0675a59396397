#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meshcnn/mesh.hpp"

namespace meshcnn::synth {

enum class SurfaceFamily { bumpy_sphere, ridged_heightfield };

std::string to_string(SurfaceFamily family);
SurfaceFamily family_from_string(const std::string& s);

// Parameters of one synthetic labeled mesh. The positive band is defined in
// the generator's parametric domain (distance to crease lines or to bump
// inflection circles), never by thresholding estimated curvature, so labels
// are exact ground truth.
struct SynthConfig {
    std::uint64_t seed = 1;
    int vertex_budget = 900; // kept <= 6000
    SurfaceFamily family = SurfaceFamily::ridged_heightfield;
    int ridge_width = 1;          // label band half-width, in vertex spacings
    double noise_amplitude = 0.15; // vertex jitter as a fraction of local spacing
    int crease_count = 3;         // ridged_heightfield
    int bump_count = 4;           // bumpy_sphere

    void validate() const;
};

struct SynthResult {
    Mesh mesh; // colors carry the labels (red = positive, gray = background)
    VertexLabels labels;
    // Distance from each vertex to the nearest band center line, in units of
    // the local vertex spacing. Generator metadata for diagnostics and tests.
    std::vector<double> band_distance;
};

SynthResult generate(const SynthConfig& config);

// Plain fixtures shared by the generator and by geometry tests.
Mesh make_flat_grid(int cols, int rows, double spacing);
Mesh make_icosphere(int subdivisions, double radius);

struct SplitCounts {
    int train = 40;
    int val = 10;
    int test = 10;
};

// Writes one colored OBJ per mesh plus manifest.json. Per-mesh seeds are
// derived from the master seed and the (split, index) pair, so splits are
// disjoint and the manifest is reproducible.
void write_dataset(const SynthConfig& base, const SplitCounts& counts,
                   const std::filesystem::path& out_dir);

} // namespace meshcnn::synth
