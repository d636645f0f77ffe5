// tensor.hpp: dense channel-major activation block: index layout
// ((c * nz + z) * ny + y) * nx + x, x fastest, matching VolumeGrid planes.
#pragma once

#include <cstddef>
#include <vector>

#include "core/common.hpp"

namespace pairloc {

struct Tensor {
    int channels = 0;
    Dims3 dims{};
    std::vector<double> v;

    Tensor() = default;
    Tensor(int ch, Dims3 d)
        : channels(ch), dims(d), v(static_cast<std::size_t>(ch) * d.voxel_count(), 0.0) {}

    std::size_t channel_size() const { return dims.voxel_count(); }
    std::size_t size() const { return v.size(); }

    double* channel(int c) { return v.data() + static_cast<std::size_t>(c) * channel_size(); }
    const double* channel(int c) const {
        return v.data() + static_cast<std::size_t>(c) * channel_size();
    }

    double* row(int c, int z, int y) {
        return channel(c) + (static_cast<std::size_t>(z) * dims.ny + y) * dims.nx;
    }
    const double* row(int c, int z, int y) const {
        return channel(c) + (static_cast<std::size_t>(z) * dims.ny + y) * dims.nx;
    }

    double& at(int c, int z, int y, int x) { return row(c, z, y)[x]; }
    double at(int c, int z, int y, int x) const { return row(c, z, y)[x]; }

    bool same_shape(const Tensor& o) const { return channels == o.channels && dims == o.dims; }
};

}  // namespace pairloc
