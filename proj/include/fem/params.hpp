#pragma once

// Named views over a model's parameter and gradient storage. The optimizer
// walks trainable blocks; checkpoint I/O walks state blocks (a superset
// that includes non-trainable buffers such as batch-norm running stats).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fem {

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> value;
    std::span<double> grad; // empty for non-trainable buffers

    std::size_t size() const noexcept { return value.size(); }
};

} // namespace fem
