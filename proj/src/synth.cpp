#include "meshcnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <json.hpp>

#include "meshcnn/errors.hpp"
#include "meshcnn/obj_io.hpp"
#include "meshcnn/rng.hpp"

namespace meshcnn::synth {

using nlohmann::json;

namespace {

constexpr Color kPositiveColor{1.0, 0.0, 0.0};
constexpr Color kBackgroundColor{0.7, 0.7, 0.7};

std::vector<Color> colors_from_labels(const VertexLabels& labels) {
    std::vector<Color> colors(labels.values.size());
    for (std::size_t i = 0; i < labels.values.size(); ++i) {
        colors[i] = labels.values[i] ? kPositiveColor : kBackgroundColor;
    }
    return colors;
}

} // namespace

std::string to_string(SurfaceFamily family) {
    return family == SurfaceFamily::bumpy_sphere ? "bumpy_sphere" : "ridged_heightfield";
}

SurfaceFamily family_from_string(const std::string& s) {
    if (s == "bumpy_sphere") return SurfaceFamily::bumpy_sphere;
    if (s == "ridged_heightfield") return SurfaceFamily::ridged_heightfield;
    throw UsageError("unknown surface family '" + s + "'");
}

void SynthConfig::validate() const {
    if (vertex_budget < 12) throw UsageError("vertex budget must be >= 12");
    if (vertex_budget > 6000) throw UsageError("vertex budget capped at 6000");
    if (ridge_width < 1) throw UsageError("ridge width must be >= 1");
    if (noise_amplitude < 0.0 || noise_amplitude > 0.45) {
        throw UsageError("noise amplitude must be in [0, 0.45]");
    }
    if (crease_count < 1 || bump_count < 1) {
        throw UsageError("crease/bump counts must be >= 1");
    }
}

Mesh make_flat_grid(int cols, int rows, double spacing) {
    std::vector<Vec3> verts;
    verts.reserve(static_cast<std::size_t>(cols) * rows);
    for (int j = 0; j < rows; ++j) {
        for (int i = 0; i < cols; ++i) {
            verts.push_back({i * spacing, j * spacing, 0.0});
        }
    }
    std::vector<std::array<int, 3>> faces;
    faces.reserve(static_cast<std::size_t>(cols - 1) * (rows - 1) * 2);
    for (int j = 0; j + 1 < rows; ++j) {
        for (int i = 0; i + 1 < cols; ++i) {
            const int a = j * cols + i;
            const int b = j * cols + i + 1;
            const int c = (j + 1) * cols + i;
            const int d = (j + 1) * cols + i + 1;
            faces.push_back({a, b, d});
            faces.push_back({a, d, c});
        }
    }
    return Mesh(std::move(verts), std::move(faces));
}

namespace {

struct RawMesh {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
};

// Unit icosahedron (outward-wound faces), subdivided `level` times with
// midpoint dedup, every vertex projected back to the unit sphere.
RawMesh unit_icosphere(int level) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    auto normalize = [](Vec3 v) {
        const double len = norm(v);
        return v * (1.0 / len);
    };
    for (auto& v : verts) v = normalize(v);

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back(normalize((verts[a] + verts[b]) * 0.5));
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    return {std::move(verts), std::move(faces)};
}

int icosphere_vertex_count(int level) { return 10 * (1 << (2 * level)) + 2; }

} // namespace

Mesh make_icosphere(int subdivisions, double radius) {
    RawMesh raw = unit_icosphere(subdivisions);
    for (auto& v : raw.verts) v = v * radius;
    return Mesh(std::move(raw.verts), std::move(raw.faces));
}

namespace {

SynthResult generate_heightfield(const SynthConfig& config) {
    const int side = static_cast<int>(std::floor(std::sqrt(config.vertex_budget)));
    const int cols = std::max(side, 3);
    const int rows = std::max(side, 3);
    const double extent = 20.0; // mm
    const double h = extent / (cols - 1);

    Rng rng(config.seed);

    struct Crease {
        double px, py;   // a point on the line
        double nx, ny;   // unit normal
        double depth;    // groove depth at the crest
    };
    const double groove_half_width = (config.ridge_width + 1.5) * h;
    std::vector<Crease> creases;
    for (int c = 0; c < config.crease_count; ++c) {
        const double angle = rng.uniform(0.0, std::numbers::pi);
        Crease cr;
        cr.px = rng.uniform(0.15, 0.85) * extent;
        cr.py = rng.uniform(0.15, 0.85) * extent;
        cr.nx = -std::sin(angle);
        cr.ny = std::cos(angle);
        cr.depth = rng.uniform(0.6, 1.0) * groove_half_width;
        creases.push_back(cr);
    }

    // Gentle doubly periodic base relief so the background is curved but tame.
    const double base_amp = 0.6;
    const double base_len1 = extent / rng.uniform(1.4, 2.0);
    const double base_len2 = extent / rng.uniform(1.4, 2.0);
    const double phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);

    std::vector<Vec3> verts;
    VertexLabels labels;
    std::vector<double> band_distance;
    verts.reserve(static_cast<std::size_t>(cols) * rows);
    labels.values.reserve(verts.capacity());
    band_distance.reserve(verts.capacity());

    const double band_halfwidth = (config.ridge_width + 0.5) * h;
    for (int j = 0; j < rows; ++j) {
        for (int i = 0; i < cols; ++i) {
            const double u = i * h + config.noise_amplitude * h * rng.uniform(-1.0, 1.0);
            const double v = j * h + config.noise_amplitude * h * rng.uniform(-1.0, 1.0);
            double z = base_amp * std::sin(2.0 * std::numbers::pi * u / base_len1 + phase1) *
                       std::sin(2.0 * std::numbers::pi * v / base_len2 + phase2);
            double min_dist = std::numeric_limits<double>::infinity();
            for (const auto& cr : creases) {
                const double dist = std::abs((u - cr.px) * cr.nx + (v - cr.py) * cr.ny);
                min_dist = std::min(min_dist, dist);
                // raised ridge: the crest fold bends away from the surface
                // normal, so the strong signal lands in k_max
                z += cr.depth * std::max(0.0, 1.0 - dist / groove_half_width);
            }
            verts.push_back({u, v, z});
            labels.values.push_back(min_dist <= band_halfwidth ? 1 : 0);
            band_distance.push_back(min_dist / h);
        }
    }

    std::vector<std::array<int, 3>> faces;
    faces.reserve(static_cast<std::size_t>(cols - 1) * (rows - 1) * 2);
    for (int j = 0; j + 1 < rows; ++j) {
        for (int i = 0; i + 1 < cols; ++i) {
            const int a = j * cols + i;
            const int b = j * cols + i + 1;
            const int c = (j + 1) * cols + i;
            const int d = (j + 1) * cols + i + 1;
            faces.push_back({a, b, d});
            faces.push_back({a, d, c});
        }
    }

    SynthResult out{Mesh(std::move(verts), std::move(faces), colors_from_labels(labels)),
                    std::move(labels), std::move(band_distance)};
    return out;
}

SynthResult generate_bumpy_sphere(const SynthConfig& config) {
    int level = 0;
    while (level < 5 && icosphere_vertex_count(level + 1) <= config.vertex_budget) {
        ++level;
    }
    const int n = icosphere_vertex_count(level);
    if (n < 30 * config.bump_count) {
        throw UsageError("vertex budget too small for " + std::to_string(config.bump_count) +
                         " bumps (needs >= " + std::to_string(30 * config.bump_count) +
                         " vertices)");
    }

    const double radius = 10.0; // mm
    const double bump_radius = 0.55; // angular, radians
    const double bump_height = 0.15; // fraction of radius
    // mean angular spacing shrinks by half per subdivision level
    const double spacing = 1.0515 / (1 << level);

    Rng rng(config.seed);
    std::vector<Vec3> centers;
    int attempts = 0;
    while (static_cast<int>(centers.size()) < config.bump_count) {
        if (++attempts > 300) {
            throw UsageError("cannot place " + std::to_string(config.bump_count) +
                             " bumps with separation on this sphere");
        }
        // uniform direction on the sphere
        const double zc = rng.uniform(-1.0, 1.0);
        const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        Vec3 cand{rr * std::cos(az), rr * std::sin(az), zc};
        bool ok = true;
        for (const auto& c : centers) {
            if (std::acos(std::clamp(dot(cand, c), -1.0, 1.0)) < 2.4 * bump_radius) {
                ok = false;
                break;
            }
        }
        if (ok) centers.push_back(cand);
    }

    RawMesh raw = unit_icosphere(level);
    VertexLabels labels;
    labels.values.resize(raw.verts.size());
    std::vector<double> band_distance(raw.verts.size());
    const double band_halfwidth = (config.ridge_width + 0.5) * spacing;

    for (std::size_t i = 0; i < raw.verts.size(); ++i) {
        Vec3 dir = raw.verts[i];
        if (config.noise_amplitude > 0.0) {
            dir += Vec3{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                        rng.uniform(-1.0, 1.0)} *
                   (config.noise_amplitude * spacing * 0.5);
            dir = dir * (1.0 / norm(dir));
        }
        double bump_sum = 0.0;
        double min_inflection_dist = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) {
            const double alpha = std::acos(std::clamp(dot(dir, c), -1.0, 1.0));
            if (alpha < bump_radius) {
                bump_sum += 0.5 * (1.0 + std::cos(std::numbers::pi * alpha / bump_radius));
            }
            // the profile's inflection circle sits at half the bump radius
            min_inflection_dist =
                std::min(min_inflection_dist, std::abs(alpha - bump_radius / 2.0));
        }
        raw.verts[i] = dir * (radius * (1.0 + bump_height * bump_sum));
        labels.values[i] = min_inflection_dist <= band_halfwidth ? 1 : 0;
        band_distance[i] = min_inflection_dist / spacing;
    }

    SynthResult out{Mesh(std::move(raw.verts), std::move(raw.faces),
                         colors_from_labels(labels)),
                    std::move(labels), std::move(band_distance)};
    return out;
}

} // namespace

SynthResult generate(const SynthConfig& config) {
    config.validate();
    return config.family == SurfaceFamily::ridged_heightfield
               ? generate_heightfield(config)
               : generate_bumpy_sphere(config);
}

void write_dataset(const SynthConfig& base, const SplitCounts& counts,
                   const std::filesystem::path& out_dir) {
    base.validate();
    if (counts.train < 1) throw UsageError("train split must have at least one mesh");
    std::filesystem::create_directories(out_dir);

    json manifest;
    manifest["master_seed"] = base.seed;
    manifest["family"] = to_string(base.family);
    manifest["vertex_budget"] = base.vertex_budget;
    manifest["ridge_width"] = base.ridge_width;
    manifest["noise_amplitude"] = base.noise_amplitude;
    manifest["crease_count"] = base.crease_count;
    manifest["bump_count"] = base.bump_count;

    const std::pair<std::string, int> splits[] = {
        {"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
    int stream = 0;
    for (const auto& [split, count] : splits) {
        json entries = json::array();
        for (int i = 0; i < count; ++i) {
            SynthConfig cfg = base;
            cfg.seed = Rng::derive(base.seed, stream, i);
            SynthResult result = generate(cfg);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%04d.obj", split.c_str(), i);
            write_obj(result.mesh, out_dir / name);
            json e;
            e["file"] = name;
            e["seed"] = cfg.seed;
            e["positives"] = result.labels.positive_count();
            e["vertices"] = result.mesh.vertex_count();
            entries.push_back(e);
        }
        manifest["splits"][split] = entries;
        ++stream;
    }

    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw DataError("cannot write manifest in " + out_dir.string());
    out << manifest.dump(2) << '\n';
}

} // namespace meshcnn::synth
