#include "meshcnn/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "meshcnn/errors.hpp"
#include "meshcnn/logging.hpp"

namespace meshcnn {

namespace {

constexpr double kAreaEps = 1e-14;
constexpr double kCurvatureClamp = 50.0;

struct VertexAccum {
    double angle_sum = 0.0;
    double mixed_area = 0.0;
    Vec3 laplacian{};
    Vec3 normal{};
    bool touched = false;
};

// Mixed Voronoi area share of corner `a` in triangle (a,b,c): the true
// Voronoi cell for non-obtuse triangles, area/2 when obtuse at a, area/4
// when obtuse elsewhere. Keeps the cells a partition of the surface.
double mixed_area_share(double angle_a, double angle_b, double angle_c, double area,
                        double len_ab_sq, double len_ac_sq) {
    const double half_pi = std::numbers::pi / 2.0;
    if (angle_a > half_pi) return area / 2.0;
    if (angle_b > half_pi || angle_c > half_pi) return area / 4.0;
    const double cot_b = std::cos(angle_b) / std::sin(angle_b);
    const double cot_c = std::cos(angle_c) / std::sin(angle_c);
    return (len_ac_sq * cot_b + len_ab_sq * cot_c) / 8.0;
}

} // namespace

CurvatureSet curvatures(const Mesh& mesh) {
    const int n = mesh.vertex_count();
    const auto& verts = mesh.vertices();
    std::vector<VertexAccum> acc(n);
    bool warned_degenerate = false;

    for (const auto& f : mesh.faces()) {
        const Vec3& pa = verts[f[0]];
        const Vec3& pb = verts[f[1]];
        const Vec3& pc = verts[f[2]];
        const Vec3 face_normal = cross(pb - pa, pc - pa); // length = 2 * area
        const double area = norm(face_normal) / 2.0;
        if (area < kAreaEps) {
            if (!warned_degenerate) {
                logging::warn("zero-area face skipped in curvature accumulation");
                warned_degenerate = true;
            }
            continue;
        }

        const double angle_a = wedge_angle(pa, pb, pc);
        const double angle_b = wedge_angle(pb, pc, pa);
        const double angle_c = wedge_angle(pc, pa, pb);
        const double cot_a = std::cos(angle_a) / std::sin(angle_a);
        const double cot_b = std::cos(angle_b) / std::sin(angle_b);
        const double cot_c = std::cos(angle_c) / std::sin(angle_c);

        const double ab = dot(pb - pa, pb - pa);
        const double bc = dot(pc - pb, pc - pb);
        const double ca = dot(pa - pc, pa - pc);

        VertexAccum& aa = acc[f[0]];
        VertexAccum& ab_acc = acc[f[1]];
        VertexAccum& ac = acc[f[2]];
        aa.touched = ab_acc.touched = ac.touched = true;

        aa.angle_sum += angle_a;
        ab_acc.angle_sum += angle_b;
        ac.angle_sum += angle_c;

        aa.mixed_area += mixed_area_share(angle_a, angle_b, angle_c, area, ab, ca);
        ab_acc.mixed_area += mixed_area_share(angle_b, angle_c, angle_a, area, bc, ab);
        ac.mixed_area += mixed_area_share(angle_c, angle_a, angle_b, area, ca, bc);

        // Cotangent Laplacian: the edge (i,j) of this face is weighted by the
        // cotangent of the angle opposite it. Boundary edges naturally get a
        // one-sided term, so boundary vertices use their interior fan only.
        aa.laplacian += (pa - pb) * cot_c + (pa - pc) * cot_b;
        ab_acc.laplacian += (pb - pc) * cot_a + (pb - pa) * cot_c;
        ac.laplacian += (pc - pa) * cot_b + (pc - pb) * cot_a;

        aa.normal += face_normal;
        ab_acc.normal += face_normal;
        ac.normal += face_normal;
    }

    CurvatureSet out;
    out.k_max.resize(n);
    out.k_min.resize(n);
    out.k_mean.resize(n);
    out.k_gauss.resize(n);
    bool warned_area = false;
    for (int v = 0; v < n; ++v) {
        const VertexAccum& a = acc[v];
        if (!a.touched || a.mixed_area < kAreaEps) {
            if (a.touched && !warned_area) {
                logging::warn("vertex " + std::to_string(v) +
                              " has vanishing mixed area; curvatures set to 0");
                warned_area = true;
            }
            out.k_max[v] = out.k_min[v] = out.k_mean[v] = out.k_gauss[v] = 0.0;
            continue;
        }
        const double flat_reference =
            mesh.is_boundary_vertex(v) ? std::numbers::pi : 2.0 * std::numbers::pi;
        const double k_gauss = (flat_reference - a.angle_sum) / a.mixed_area;

        const Vec3 mean_vec = a.laplacian * (1.0 / (2.0 * a.mixed_area));
        double k_mean = norm(mean_vec) / 2.0;
        if (dot(mean_vec, a.normal) < 0.0) k_mean = -k_mean;

        const double disc = std::max(k_mean * k_mean - k_gauss, 0.0);
        const double spread = std::sqrt(disc);
        out.k_gauss[v] = k_gauss;
        out.k_mean[v] = k_mean;
        out.k_max[v] = k_mean + spread;
        out.k_min[v] = k_mean - spread;
    }
    return out;
}

double mean_neighbor_distance(const Mesh& mesh, int v) {
    mesh.check_vertex_index(v);
    auto nbrs = mesh.neighbors(v);
    if (nbrs.empty()) {
        logging::warn("vertex " + std::to_string(v) +
                      " has no neighbors; mean distance set to 0");
        return 0.0;
    }
    double sum = 0.0;
    for (int w : nbrs) {
        sum += distance(mesh.vertices()[v], mesh.vertices()[w]);
    }
    return sum / static_cast<double>(nbrs.size());
}

std::vector<std::string> FeatureSelection::names() const {
    std::vector<std::string> out;
    if (coordinates) {
        out.insert(out.end(), {"x", "y", "z"});
    }
    if (curvatures) {
        out.insert(out.end(), {"k_max", "k_min", "k_mean", "k_gauss"});
    }
    if (distance) {
        out.push_back("d");
    }
    return out;
}

std::string FeatureSelection::to_string() const {
    std::string s;
    auto append = [&s](const char* tok) {
        if (!s.empty()) s += '+';
        s += tok;
    };
    if (coordinates) append("coords");
    if (curvatures) append("curv");
    if (distance) append("dist");
    return s;
}

FeatureSelection FeatureSelection::parse(const std::string& text) {
    FeatureSelection sel{false, false, false};
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t plus = text.find('+', pos);
        std::string tok = text.substr(pos, plus == std::string::npos ? text.size() - pos
                                                                     : plus - pos);
        pos = plus == std::string::npos ? text.size() + 1 : plus + 1;
        if (tok == "coords") {
            sel.coordinates = true;
        } else if (tok == "curv") {
            sel.curvatures = true;
        } else if (tok == "dist") {
            sel.distance = true;
        } else if (tok == "all") {
            sel.coordinates = sel.curvatures = sel.distance = true;
        } else if (!tok.empty()) {
            throw UsageError("unknown feature group '" + tok +
                             "' (expected coords, curv, dist or all)");
        }
    }
    if (sel.column_count() == 0) {
        throw UsageError("feature selection is empty");
    }
    return sel;
}

namespace {

// z-score in place; a constant column becomes all zeros.
void standardize_column(FeatureMatrix& fm, int col) {
    double mean = 0.0;
    for (int i = 0; i < fm.rows; ++i) mean += fm.at(i, col);
    mean /= fm.rows;
    double var = 0.0;
    for (int i = 0; i < fm.rows; ++i) {
        const double d = fm.at(i, col) - mean;
        var += d * d;
    }
    const double stddev = std::sqrt(var / fm.rows);
    if (stddev < 1e-12) {
        for (int i = 0; i < fm.rows; ++i) fm.at(i, col) = 0.0;
        return;
    }
    for (int i = 0; i < fm.rows; ++i) fm.at(i, col) = (fm.at(i, col) - mean) / stddev;
}

} // namespace

FeatureMatrix assemble_features(const Mesh& mesh, const FeatureSelection& sel) {
    const int n = mesh.vertex_count();
    const int m = sel.column_count();
    if (m == 0) {
        throw UsageError("feature selection is empty");
    }
    if (n == 0) {
        throw DataError("cannot assemble features for an empty mesh");
    }

    FeatureMatrix fm;
    fm.rows = n;
    fm.cols = m;
    fm.feature_names = sel.names();
    fm.data.assign(static_cast<std::size_t>(n) * m, 0.0);

    int col = 0;
    if (sel.coordinates) {
        Vec3 centroid{};
        for (const auto& p : mesh.vertices()) centroid += p;
        centroid = centroid * (1.0 / n);
        for (int i = 0; i < n; ++i) {
            const Vec3 p = mesh.vertices()[i] - centroid;
            fm.at(i, col) = p.x;
            fm.at(i, col + 1) = p.y;
            fm.at(i, col + 2) = p.z;
        }
        col += 3;
    }
    if (sel.curvatures) {
        const CurvatureSet ks = curvatures(mesh);
        const std::vector<double>* channels[4] = {&ks.k_max, &ks.k_min, &ks.k_mean,
                                                  &ks.k_gauss};
        for (int c = 0; c < 4; ++c) {
            for (int i = 0; i < n; ++i) {
                fm.at(i, col + c) =
                    std::clamp((*channels[c])[i], -kCurvatureClamp, kCurvatureClamp);
            }
            standardize_column(fm, col + c);
        }
        col += 4;
    }
    if (sel.distance) {
        for (int i = 0; i < n; ++i) {
            fm.at(i, col) = mean_neighbor_distance(mesh, i);
        }
        standardize_column(fm, col);
        col += 1;
    }

    for (double v : fm.data) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite feature value produced");
        }
    }
    return fm;
}

} // namespace meshcnn
