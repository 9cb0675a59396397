#include "meshcnn/tensor.hpp"

#include "meshcnn/errors.hpp"

namespace meshcnn {

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    std::int64_t count = 1;
    for (int d : shape) {
        if (d < 0) throw UsageError("tensor dimensions must be non-negative");
        count *= d;
    }
    t.shape = std::move(shape);
    t.data.assign(static_cast<std::size_t>(count), 0.0);
    return t;
}

} // namespace meshcnn
