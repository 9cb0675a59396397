#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "meshcnn/errors.hpp"
#include "meshcnn/features.hpp"
#include "meshcnn/logging.hpp"
#include "meshcnn/obj_io.hpp"
#include "meshcnn/synth.hpp"
#include "oracles.hpp"

using namespace meshcnn;

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Mesh transformed(const Mesh& mesh, const std::array<double, 9>& rot, const Vec3& shift,
                 double scale = 1.0) {
    std::vector<Vec3> verts;
    verts.reserve(mesh.vertices().size());
    for (const auto& p : mesh.vertices()) {
        Vec3 q{rot[0] * p.x + rot[1] * p.y + rot[2] * p.z,
               rot[3] * p.x + rot[4] * p.y + rot[5] * p.z,
               rot[6] * p.x + rot[7] * p.y + rot[8] * p.z};
        verts.push_back(q * scale + shift);
    }
    return Mesh(std::move(verts), mesh.faces());
}

std::array<double, 9> random_rotation(Rng& rng) {
    // rotation from a random unit quaternion
    double q[4];
    double len = 0.0;
    for (double& c : q) {
        c = rng.uniform(-1.0, 1.0);
        len += c * c;
    }
    len = std::sqrt(len);
    for (double& c : q) c /= len;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
}

// Independent mixed-area computation for a single vertex, written against the
// textbook case analysis rather than the accumulation in the library.
double mixed_area_oracle(const Mesh& mesh, int v) {
    double area_sum = 0.0;
    for (const auto& f : mesh.faces()) {
        int corner = -1;
        for (int k = 0; k < 3; ++k) {
            if (f[k] == v) corner = k;
        }
        if (corner < 0) continue;
        const Vec3& p = mesh.vertices()[f[corner]];
        const Vec3& q = mesh.vertices()[f[(corner + 1) % 3]];
        const Vec3& r = mesh.vertices()[f[(corner + 2) % 3]];
        const double a_p = wedge_angle(p, q, r);
        const double a_q = wedge_angle(q, r, p);
        const double a_r = wedge_angle(r, p, q);
        const double area = norm(cross(q - p, r - p)) / 2.0;
        const double half_pi = std::numbers::pi / 2.0;
        if (a_p > half_pi) {
            area_sum += area / 2.0;
        } else if (a_q > half_pi || a_r > half_pi) {
            area_sum += area / 4.0;
        } else {
            const double pq2 = dot(q - p, q - p);
            const double pr2 = dot(r - p, r - p);
            area_sum += (pq2 / std::tan(a_r) + pr2 / std::tan(a_q)) / 8.0;
        }
    }
    return area_sum;
}

} // namespace

TEST_CASE("mean neighbor distance: analytic cases") {
    const Mesh tet = oracle::tetrahedron(1.0);
    for (int v = 0; v < 4; ++v) {
        CHECK(mean_neighbor_distance(tet, v) == doctest::Approx(1.0).epsilon(1e-12));
    }

    const Mesh tri = parse_obj("v 0 0 0\nv 3 0 0\nv 0 4 0\nf 1 2 3\n");
    CHECK(mean_neighbor_distance(tri, 0) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("mean neighbor distance equals mean incident edge length") {
    const Mesh sphere = synth::make_icosphere(2, 2.5);
    for (int v = 0; v < sphere.vertex_count(); v += 7) {
        // independent route: collect incident edges from the face list
        double sum = 0.0;
        int count = 0;
        std::vector<int> seen;
        for (const auto& f : sphere.faces()) {
            for (int k = 0; k < 3; ++k) {
                if (f[k] != v) continue;
                for (int other : {f[(k + 1) % 3], f[(k + 2) % 3]}) {
                    if (std::find(seen.begin(), seen.end(), other) == seen.end()) {
                        seen.push_back(other);
                        sum += distance(sphere.vertices()[v], sphere.vertices()[other]);
                        ++count;
                    }
                }
            }
        }
        CHECK(mean_neighbor_distance(sphere, v) ==
              doctest::Approx(sum / count).epsilon(1e-12));
    }
}

TEST_CASE("isolated vertex distance is zero with a warning") {
    // vertex 3 is referenced by no face
    const Mesh mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 9 9 9\nf 1 2 3\n");
    int warnings = 0;
    logging::set_warn_handler([&](const std::string&) { ++warnings; });
    CHECK(mean_neighbor_distance(mesh, 3) == 0.0);
    logging::reset_warn_handler();
    CHECK(warnings == 1);
}

TEST_CASE("flat grid interior vertices have zero curvature") {
    const Mesh grid = synth::make_flat_grid(9, 9, 0.8);
    const CurvatureSet ks = curvatures(grid);
    for (int j = 1; j < 8; ++j) {
        for (int i = 1; i < 8; ++i) {
            const int v = j * 9 + i;
            CHECK(std::abs(ks.k_gauss[v]) < 1e-6);
            CHECK(std::abs(ks.k_mean[v]) < 1e-6);
            CHECK(std::abs(ks.k_max[v]) < 1e-6);
            CHECK(std::abs(ks.k_min[v]) < 1e-6);
        }
    }
}

TEST_CASE("unit icosphere curvature approaches 1") {
    const Mesh sphere = synth::make_icosphere(3, 1.0);
    const CurvatureSet ks = curvatures(sphere);
    std::vector<double> mean_err, gauss_err;
    for (int v = 0; v < sphere.vertex_count(); ++v) {
        mean_err.push_back(std::abs(ks.k_mean[v] - 1.0));
        gauss_err.push_back(std::abs(ks.k_gauss[v] - 1.0));
    }
    CHECK(median_of(mean_err) < 0.05);
    CHECK(median_of(gauss_err) < 0.05);
}

TEST_CASE("cube corner Gaussian curvature equals deficit over mixed area") {
    const Mesh cube = oracle::unit_cube();
    // vertex 0 meets three faces at right angles: angle sum 3*pi/2
    const CurvatureSet ks = curvatures(cube);
    const double deficit = 2.0 * std::numbers::pi - 3.0 * std::numbers::pi / 2.0;
    const double area = mixed_area_oracle(cube, 0);
    CHECK(area == doctest::Approx(0.75).epsilon(1e-12)); // three right triangles
    CHECK(ks.k_gauss[0] == doctest::Approx(deficit / area).epsilon(1e-9));
    CHECK(ks.k_gauss[0] ==
          doctest::Approx(2.0 * std::numbers::pi / 3.0).epsilon(1e-9));
}

TEST_CASE("curvature ordering and product identity") {
    synth::SynthConfig cfg;
    cfg.seed = 99;
    cfg.vertex_budget = 400;
    const auto synth_result = synth::generate(cfg);
    const CurvatureSet ks = curvatures(synth_result.mesh);
    for (int v = 0; v < synth_result.mesh.vertex_count(); ++v) {
        CHECK(ks.k_min[v] <= ks.k_mean[v] + 1e-12);
        CHECK(ks.k_mean[v] <= ks.k_max[v] + 1e-12);
        const double disc = ks.k_mean[v] * ks.k_mean[v] - ks.k_gauss[v];
        if (disc >= 0.0) { // not clamped
            CHECK(ks.k_max[v] * ks.k_min[v] ==
                  doctest::Approx(ks.k_gauss[v]).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("rigid motion leaves curvatures and distances invariant") {
    Rng rng(12345);
    const Mesh base = synth::make_icosphere(2, 3.0);
    const Mesh moved = transformed(base, random_rotation(rng),
                                   {rng.uniform(-5, 5), rng.uniform(-5, 5), 17.0});

    const CurvatureSet a = curvatures(base);
    const CurvatureSet b = curvatures(moved);
    for (int v = 0; v < base.vertex_count(); ++v) {
        CHECK(oracle::rel_err(b.k_max[v], a.k_max[v], 1e-9) < 1e-6);
        CHECK(oracle::rel_err(b.k_min[v], a.k_min[v], 1e-9) < 1e-6);
        CHECK(oracle::rel_err(b.k_mean[v], a.k_mean[v], 1e-9) < 1e-6);
        CHECK(oracle::rel_err(b.k_gauss[v], a.k_gauss[v], 1e-9) < 1e-6);
        CHECK(oracle::rel_err(mean_neighbor_distance(moved, v),
                              mean_neighbor_distance(base, v), 1e-9) < 1e-6);
    }
}

TEST_CASE("uniform scaling laws on the icosphere") {
    const double s = 2.75;
    const Mesh base = synth::make_icosphere(2, 1.0);
    const Mesh scaled = synth::make_icosphere(2, s);

    const CurvatureSet a = curvatures(base);
    const CurvatureSet b = curvatures(scaled);
    for (int v = 0; v < base.vertex_count(); ++v) {
        CHECK(oracle::rel_err(b.k_mean[v], a.k_mean[v] / s, 1e-9) < 0.01);
        CHECK(oracle::rel_err(b.k_max[v], a.k_max[v] / s, 1e-9) < 0.01);
        CHECK(oracle::rel_err(b.k_min[v], a.k_min[v] / s, 1e-9) < 0.01);
        CHECK(oracle::rel_err(b.k_gauss[v], a.k_gauss[v] / (s * s), 1e-9) < 0.01);
        CHECK(oracle::rel_err(mean_neighbor_distance(scaled, v),
                              mean_neighbor_distance(base, v) * s, 1e-9) < 0.01);
    }
}

TEST_CASE("degenerate faces zero the curvature with a warning") {
    // the second triangle is collinear (zero area) but not index-degenerate
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
    std::vector<std::array<int, 3>> faces = {{0, 1, 2}, {1, 3, 0}};
    const Mesh mesh(std::move(verts), std::move(faces));
    int warnings = 0;
    logging::set_warn_handler([&](const std::string&) { ++warnings; });
    const CurvatureSet ks = curvatures(mesh);
    logging::reset_warn_handler();
    CHECK(warnings >= 1);
    CHECK(ks.k_gauss[3] == 0.0); // its whole fan is degenerate
}

TEST_CASE("feature selection shapes and names") {
    CHECK(FeatureSelection{false, true, true}.column_count() == 5);
    CHECK(FeatureSelection{true, false, false}.column_count() == 3);
    CHECK(FeatureSelection{true, true, true}.column_count() == 8);

    CHECK(FeatureSelection::parse("curv+dist").column_count() == 5);
    CHECK(FeatureSelection::parse("coords").column_count() == 3);
    CHECK(FeatureSelection::parse("all").column_count() == 8);
    CHECK_THROWS_AS(FeatureSelection::parse("bogus"), UsageError);
    CHECK_THROWS_AS(FeatureSelection::parse(""), UsageError);

    const auto names = FeatureSelection{true, true, true}.names();
    const std::vector<std::string> want = {"x",      "y",      "z", "k_max", "k_min",
                                           "k_mean", "k_gauss", "d"};
    CHECK(names == want);
}

TEST_CASE("assemble_features output") {
    synth::SynthConfig cfg;
    cfg.seed = 5;
    cfg.vertex_budget = 200;
    const auto synth_result = synth::generate(cfg);
    const Mesh& mesh = synth_result.mesh;

    const FeatureMatrix fm = assemble_features(mesh, FeatureSelection{false, true, true});
    CHECK(fm.rows == mesh.vertex_count());
    CHECK(fm.cols == 5);
    for (double v : fm.data) CHECK(std::isfinite(v));

    // standardized columns have mean ~0 and unit variance
    for (int c = 0; c < fm.cols; ++c) {
        double mean = 0.0;
        for (int i = 0; i < fm.rows; ++i) mean += fm.at(i, c);
        mean /= fm.rows;
        CHECK(std::abs(mean) < 1e-9);
        double var = 0.0;
        for (int i = 0; i < fm.rows; ++i) {
            var += (fm.at(i, c) - mean) * (fm.at(i, c) - mean);
        }
        CHECK(var / fm.rows == doctest::Approx(1.0).epsilon(1e-9));
    }

    // coordinates are centered but not scaled
    const FeatureMatrix coords = assemble_features(mesh, FeatureSelection{true, false, false});
    CHECK(coords.cols == 3);
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (int i = 0; i < coords.rows; ++i) mean += coords.at(i, c);
        CHECK(std::abs(mean / coords.rows) < 1e-9);
    }
    double spread = 0.0;
    for (int i = 0; i < coords.rows; ++i) spread = std::max(spread, std::abs(coords.at(i, 0)));
    CHECK(spread > 1.0); // still in model units, not z-scored

    const FeatureMatrix all = assemble_features(mesh, FeatureSelection{true, true, true});
    CHECK(all.cols == 8);
}
