#pragma once

#include <cstdint>
#include <vector>

namespace meshcnn {

// Dense row-major tensor of doubles. Shapes are small (rank <= 4); all math
// runs in double precision.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    static Tensor zeros(std::vector<int> shape);

    std::int64_t numel() const {
        std::int64_t p = 1;
        for (int d : shape) p *= d;
        return p;
    }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double v) { data.assign(data.size(), v); }
};

} // namespace meshcnn
