#include "meshcnn/obj_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "meshcnn/errors.hpp"

namespace meshcnn {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_number(std::string_view tok, int line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw DataError("line " + std::to_string(line_no) + ": expected a number, got '" +
                        std::string(tok) + "'");
    }
    return value;
}

// Face references look like "i", "i/t", "i//n" or "i/t/n"; only the vertex
// index matters here.
int parse_face_index(std::string_view tok, int line_no) {
    std::string_view head = tok.substr(0, tok.find('/'));
    int value = 0;
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
    if (ec != std::errc{} || ptr != head.data() + head.size()) {
        throw DataError("line " + std::to_string(line_no) + ": bad face index '" +
                        std::string(tok) + "'");
    }
    if (value <= 0) {
        throw DataError("line " + std::to_string(line_no) +
                        ": face indices must be positive 1-based, got " +
                        std::to_string(value));
    }
    return value - 1;
}

} // namespace

Mesh parse_obj(std::string_view text) {
    std::vector<Vec3> vertices;
    std::vector<Color> colors;
    std::vector<std::array<int, 3>> faces;
    bool saw_plain = false;
    bool saw_colored = false;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos
                                                     ? text.size() - pos
                                                     : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        auto tokens = split_ws(line);
        std::string_view key = tokens[0];
        if (key == "v") {
            const std::size_t fields = tokens.size() - 1;
            if (fields != 3 && fields != 6) {
                throw DataError("line " + std::to_string(line_no) +
                                ": vertex line must have 3 or 6 numeric fields, got " +
                                std::to_string(fields));
            }
            Vec3 p{parse_number(tokens[1], line_no), parse_number(tokens[2], line_no),
                   parse_number(tokens[3], line_no)};
            vertices.push_back(p);
            if (fields == 6) {
                saw_colored = true;
                colors.push_back({parse_number(tokens[4], line_no),
                                  parse_number(tokens[5], line_no),
                                  parse_number(tokens[6], line_no)});
            } else {
                saw_plain = true;
            }
            if (saw_plain && saw_colored) {
                throw DataError("line " + std::to_string(line_no) +
                                ": mixed colored and uncolored vertex lines");
            }
        } else if (key == "f") {
            if (tokens.size() - 1 < 3) {
                throw DataError("line " + std::to_string(line_no) +
                                ": face needs at least 3 indices");
            }
            std::vector<int> poly;
            poly.reserve(tokens.size() - 1);
            for (std::size_t t = 1; t < tokens.size(); ++t) {
                poly.push_back(parse_face_index(tokens[t], line_no));
            }
            // Scanner exports occasionally emit quads; fan triangulation keeps
            // them loadable with unchanged edge semantics.
            for (std::size_t t = 1; t + 1 < poly.size(); ++t) {
                faces.push_back({poly[0], poly[t], poly[t + 1]});
            }
        }
        // vn/vt/o/g/s/usemtl/mtllib/l/p and unknown keywords are skipped.
    }

    return Mesh(std::move(vertices), std::move(faces), std::move(colors));
}

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open mesh file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_obj(buf.str());
}

void write_obj(const Mesh& mesh, const std::filesystem::path& path) {
    std::FILE* out = std::fopen(path.string().c_str(), "wb");
    if (!out) {
        throw DataError("cannot open output file: " + path.string());
    }
    const auto& verts = mesh.vertices();
    if (mesh.has_colors()) {
        const auto& cols = mesh.colors();
        for (std::size_t i = 0; i < verts.size(); ++i) {
            std::fprintf(out, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", verts[i].x,
                         verts[i].y, verts[i].z, cols[i].r, cols[i].g, cols[i].b);
        }
    } else {
        for (const auto& v : verts) {
            std::fprintf(out, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        }
    }
    for (const auto& f : mesh.faces()) {
        std::fprintf(out, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    std::fclose(out);
}

} // namespace meshcnn
