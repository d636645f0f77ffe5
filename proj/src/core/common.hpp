// common.hpp: shared small types and error taxonomy for the pairloc core.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pairloc {

struct Vec3d {
    double x = 0.0, y = 0.0, z = 0.0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    friend bool operator==(const Vec3d& a, const Vec3d& b) {
        return a.x == b.x && a.y == b.y && a.z == b.z;
    }
    friend Vec3d operator+(const Vec3d& a, const Vec3d& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3d operator-(const Vec3d& a, const Vec3d& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3d operator*(const Vec3d& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
};

struct Dims3 {
    uint32_t nx = 0, ny = 0, nz = 0;

    std::size_t voxel_count() const {
        return std::size_t(nx) * std::size_t(ny) * std::size_t(nz);
    }
    uint32_t operator[](int i) const { return i == 0 ? nx : (i == 1 ? ny : nz); }
    friend bool operator==(const Dims3& a, const Dims3& b) {
        return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz;
    }
    friend bool operator!=(const Dims3& a, const Dims3& b) { return !(a == b); }
};

/// Integer voxel coordinate. Valid iff each component is below the owning grid's dims.
struct VoxelIndex {
    uint32_t i = 0, j = 0, k = 0;

    friend bool operator==(const VoxelIndex& a, const VoxelIndex& b) {
        return a.i == b.i && a.j == b.j && a.k == b.k;
    }
    bool inside(const Dims3& d) const { return i < d.nx && j < d.ny && k < d.nz; }
};

// Error taxonomy. std::invalid_argument is reused directly for precondition
// violations; the types below carry the distinctions the CLI exit codes need.

/// Malformed or inconsistent on-disk data (bad magic, truncated payload, ...).
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

/// Unknown key, unparseable value, or missing required key in a run config.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite loss or gradient encountered during optimization.
class divergence_error : public std::runtime_error {
public:
    explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

/// A statistical model could not be built (too few or rank-deficient samples).
class degenerate_error : public std::runtime_error {
public:
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pairloc
