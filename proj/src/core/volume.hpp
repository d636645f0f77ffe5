// volume.hpp: canonical 3D scalar grid, VVR1 file io, isotropic resampling,
// and symmetric crop/pad.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace pairloc {

/// Dense scalar field on a regular grid. Data is stored x-fastest, then y,
/// then z; spacing is mm per voxel, origin is the physical position of voxel
/// (0,0,0) in mm. Immutable after construction; all operations below are pure
/// functions and safe to call concurrently.
class VolumeGrid {
public:
    /// Validates dims/spacing/data-length and that every value is finite.
    VolumeGrid(Dims3 dims, Vec3d spacing, Vec3d origin, std::vector<double> data);

    static VolumeGrid filled(Dims3 dims, Vec3d spacing, Vec3d origin, double value);

    const Dims3& dims() const { return dims_; }
    const Vec3d& spacing() const { return spacing_; }
    const Vec3d& origin() const { return origin_; }
    std::span<const double> data() const { return data_; }

    std::size_t index(uint32_t i, uint32_t j, uint32_t k) const {
        return (std::size_t(k) * dims_.ny + j) * dims_.nx + i;
    }
    double at(uint32_t i, uint32_t j, uint32_t k) const { return data_[index(i, j, k)]; }
    double at(const VoxelIndex& v) const { return at(v.i, v.j, v.k); }

    double min_value() const;

private:
    Dims3 dims_;
    Vec3d spacing_;
    Vec3d origin_;
    std::vector<double> data_;
};

/// Trilinear sample at continuous voxel coordinate (x,y,z). Coordinates
/// outside [0, n-1] on any axis return `fill`. Interior interpolation is a
/// nested lerp, so constant fields are reproduced exactly and integer
/// coordinates return the stored voxel value bit-exactly.
double trilinear_sample(const VolumeGrid& vol, double x, double y, double z, double fill);

/// Resample to isotropic `target_spacing` (mm). Output dims are
/// round(dim * spacing / target) per axis with a minimum of 1; the origin is
/// kept so voxel centers align physically. Samples outside the source extent
/// take `fill` (default: the source minimum).
VolumeGrid resample_isotropic(const VolumeGrid& vol, double target_spacing,
                              std::optional<double> fill = std::nullopt);

/// Center the grid content inside `target` dims. Per axis, excess removes
/// floor(excess/2) leading voxels and the remainder trailing; deficit inserts
/// floor(deficit/2) leading fill voxels and the remainder trailing. The origin
/// shifts so surviving voxels keep their physical position.
VolumeGrid crop_or_pad_symmetric(const VolumeGrid& vol, Dims3 target, double fill);

// VVR1 container: ASCII magic "VVR1", u32 version=1, u32 dims[3],
// f32 spacing[3], f32 origin[3], then nx*ny*nz f32 values in x-fastest order.
// Every multi-byte field is little-endian.
VolumeGrid read_volume(const std::string& path);
void write_volume(const VolumeGrid& vol, const std::string& path);

}  // namespace pairloc
