#include "meshcnn/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshcnn/errors.hpp"
#include "meshcnn/obj_io.hpp"

namespace meshcnn {

using nlohmann::json;

namespace {

constexpr char kCacheMagic[8] = {'M', 'C', 'N', 'N', 'C', 'H', '0', '1'};

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint8_t selection_mask(const FeatureSelection& sel) {
    return static_cast<std::uint8_t>((sel.coordinates ? 1 : 0) | (sel.curvatures ? 2 : 0) |
                                     (sel.distance ? 4 : 0));
}

struct CacheData {
    Tensor features;
    VertexLabels labels;
    std::shared_ptr<const RingAdjacency> adjacency;
};

template <typename T>
void write_pod(std::FILE* f, const T& v) {
    std::fwrite(&v, sizeof(T), 1, f);
}

template <typename T>
bool read_pod(std::FILE* f, T& v) {
    return std::fread(&v, sizeof(T), 1, f) == 1;
}

void write_cache(const std::filesystem::path& path, std::uint64_t obj_hash,
                 const FeatureSelection& sel, const std::vector<int>& rings,
                 const CacheData& data) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) return; // cache is best effort
    std::fwrite(kCacheMagic, 1, sizeof(kCacheMagic), f);
    write_pod(f, obj_hash);
    write_pod(f, selection_mask(sel));
    const std::int32_t ring_count = static_cast<std::int32_t>(rings.size());
    write_pod(f, ring_count);
    for (int r : rings) write_pod(f, static_cast<std::int32_t>(r));
    const std::int32_t n = data.features.dim(1);
    const std::int32_t m = data.features.dim(2);
    write_pod(f, n);
    write_pod(f, m);
    std::fwrite(data.features.data.data(), sizeof(double), data.features.data.size(), f);
    std::fwrite(data.labels.values.data(), 1, data.labels.values.size(), f);
    for (std::size_t s = 0; s < rings.size(); ++s) {
        for (int v = 0; v < n; ++v) {
            const auto row = data.adjacency->row(static_cast<int>(s), v);
            write_pod(f, static_cast<std::int32_t>(row.size()));
            std::fwrite(row.data(), sizeof(int), row.size(), f);
        }
    }
    std::fclose(f);
}

bool read_cache(const std::filesystem::path& path, std::uint64_t obj_hash,
                const FeatureSelection& sel, const std::vector<int>& rings,
                CacheData& out) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) return false;
    auto fail = [&] {
        std::fclose(f);
        return false;
    };
    char magic[8];
    if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, kCacheMagic, 8) != 0) {
        return fail();
    }
    std::uint64_t hash = 0;
    std::uint8_t mask = 0;
    std::int32_t ring_count = 0;
    if (!read_pod(f, hash) || hash != obj_hash) return fail();
    if (!read_pod(f, mask) || mask != selection_mask(sel)) return fail();
    if (!read_pod(f, ring_count) || ring_count != static_cast<std::int32_t>(rings.size())) {
        return fail();
    }
    for (int r : rings) {
        std::int32_t stored = 0;
        if (!read_pod(f, stored) || stored != r) return fail();
    }
    std::int32_t n = 0, m = 0;
    if (!read_pod(f, n) || !read_pod(f, m) || n <= 0 || m <= 0) return fail();
    out.features = Tensor::zeros({1, n, m});
    if (std::fread(out.features.data.data(), sizeof(double), out.features.data.size(), f) !=
        out.features.data.size()) {
        return fail();
    }
    out.labels.values.resize(n);
    if (std::fread(out.labels.values.data(), 1, n, f) != static_cast<std::size_t>(n)) {
        return fail();
    }
    if (!rings.empty()) {
        std::vector<RingAdjacency::CsrSlot> slots(rings.size());
        for (auto& slot : slots) {
            slot.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
            for (int v = 0; v < n; ++v) {
                std::int32_t count = 0;
                if (!read_pod(f, count) || count < 0 || count > n) return fail();
                const std::size_t old = slot.cols.size();
                slot.cols.resize(old + count);
                if (count > 0 &&
                    std::fread(slot.cols.data() + old, sizeof(int), count, f) !=
                        static_cast<std::size_t>(count)) {
                    return fail();
                }
                slot.offsets[v + 1] = slot.offsets[v] + count;
            }
        }
        std::fclose(f);
        try {
            out.adjacency = std::make_shared<RingAdjacency>(n, rings, std::move(slots));
        } catch (const DataError&) {
            return false; // corrupt cache, recompute
        }
        return true;
    }
    std::fclose(f);
    return true;
}

} // namespace

Dataset Dataset::load(const std::filesystem::path& dir, const std::string& split,
                      const FeatureSelection& sel, const std::vector<int>& rings,
                      bool use_cache) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) {
        throw DataError("cannot open dataset manifest: " + manifest_path.string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad manifest JSON: ") + e.what());
    }
    if (!manifest.contains("splits") || !manifest["splits"].contains(split)) {
        throw DataError("manifest has no split '" + split + "'");
    }

    Dataset ds;
    ds.split_ = split;
    for (const auto& e : manifest["splits"][split]) {
        const std::string file = e.at("file").get<std::string>();
        const auto obj_path = dir / file;
        std::ifstream obj_in(obj_path, std::ios::binary);
        if (!obj_in) throw DataError("cannot open mesh file: " + obj_path.string());
        std::ostringstream buf;
        buf << obj_in.rdbuf();
        const std::string bytes = buf.str();
        const std::uint64_t hash = fnv1a(bytes);

        DatasetEntry entry;
        entry.id = file;
        CacheData cache;
        const auto cache_path = obj_path.string() + ".cache";
        if (use_cache && read_cache(cache_path, hash, sel, rings, cache)) {
            entry.features = std::move(cache.features);
            entry.labels = std::move(cache.labels);
            entry.adjacency = cache.adjacency;
        } else {
            Mesh mesh = parse_obj(bytes);
            FeatureMatrix fm = assemble_features(mesh, sel);
            entry.labels = labels_from_colors(mesh);
            entry.features = Tensor::zeros({1, fm.rows, fm.cols});
            entry.features.data = std::move(fm.data);
            if (!rings.empty()) {
                entry.adjacency = std::make_shared<RingAdjacency>(mesh, rings);
            }
            if (use_cache) {
                CacheData data{entry.features, entry.labels, entry.adjacency};
                write_cache(cache_path, hash, sel, rings, data);
            }
        }

        const int n = entry.features.dim(1);
        if (static_cast<int>(entry.labels.size()) != n ||
            (entry.adjacency && entry.adjacency->vertex_count() != n)) {
            throw DataError("inconsistent vertex counts for " + file);
        }
        ds.entries_.push_back(std::move(entry));
    }
    return ds;
}

double Dataset::positive_fraction() const {
    std::int64_t pos = 0, total = 0;
    for (const auto& e : entries_) {
        pos += e.labels.positive_count();
        total += static_cast<std::int64_t>(e.labels.size());
    }
    return total == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(total);
}

void write_features_csv(const FeatureMatrix& fm, const VertexLabels* labels,
                        const std::filesystem::path& path) {
    if (labels && static_cast<int>(labels->size()) != fm.rows) {
        throw DataError("label count does not match feature rows");
    }
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw DataError("cannot write CSV: " + path.string());
    for (std::size_t c = 0; c < fm.feature_names.size(); ++c) {
        std::fprintf(f, "%s%s", c ? "," : "", fm.feature_names[c].c_str());
    }
    std::fprintf(f, "%s\n", labels ? ",label" : "");
    for (int i = 0; i < fm.rows; ++i) {
        for (int c = 0; c < fm.cols; ++c) {
            std::fprintf(f, "%s%.17g", c ? "," : "", fm.at(i, c));
        }
        if (labels) std::fprintf(f, ",%d", static_cast<int>(labels->values[i]));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

} // namespace meshcnn
