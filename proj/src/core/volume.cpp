#include "core/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace pairloc {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

// --- little-endian scalar io -------------------------------------------------

void put_u32(std::string& out, uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
    out.append(b, 4);
}

void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<uint32_t>(v));
}

uint32_t get_u32(const unsigned char* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

float get_f32(const unsigned char* p) {
    return std::bit_cast<float>(get_u32(p));
}

}  // namespace

VolumeGrid::VolumeGrid(Dims3 dims, Vec3d spacing, Vec3d origin, std::vector<double> data)
    : dims_(dims), spacing_(spacing), origin_(origin), data_(std::move(data)) {
    require(dims_.nx > 0 && dims_.ny > 0 && dims_.nz > 0, "VolumeGrid: dims must be positive");
    for (int a = 0; a < 3; ++a) {
        require(std::isfinite(spacing_[a]) && spacing_[a] > 0.0, "VolumeGrid: spacing must be positive and finite");
        require(std::isfinite(origin_[a]), "VolumeGrid: origin must be finite");
    }
    require(data_.size() == dims_.voxel_count(), "VolumeGrid: data length must equal nx*ny*nz");
    for (double v : data_) {
        require(std::isfinite(v), "VolumeGrid: data must be finite");
    }
}

VolumeGrid VolumeGrid::filled(Dims3 dims, Vec3d spacing, Vec3d origin, double value) {
    return VolumeGrid(dims, spacing, origin, std::vector<double>(dims.voxel_count(), value));
}

double VolumeGrid::min_value() const {
    return *std::min_element(data_.begin(), data_.end());
}

double trilinear_sample(const VolumeGrid& vol, double x, double y, double z, double fill) {
    const Dims3& d = vol.dims();
    if (x < 0.0 || y < 0.0 || z < 0.0 || x > double(d.nx - 1) || y > double(d.ny - 1) || z > double(d.nz - 1)) {
        return fill;
    }
    uint32_t i0 = uint32_t(std::min(double(d.nx - 1), std::floor(x)));
    uint32_t j0 = uint32_t(std::min(double(d.ny - 1), std::floor(y)));
    uint32_t k0 = uint32_t(std::min(double(d.nz - 1), std::floor(z)));
    uint32_t i1 = std::min(i0 + 1, d.nx - 1);
    uint32_t j1 = std::min(j0 + 1, d.ny - 1);
    uint32_t k1 = std::min(k0 + 1, d.nz - 1);
    double fx = x - double(i0);
    double fy = y - double(j0);
    double fz = z - double(k0);

    double c00 = lerp(vol.at(i0, j0, k0), vol.at(i1, j0, k0), fx);
    double c10 = lerp(vol.at(i0, j1, k0), vol.at(i1, j1, k0), fx);
    double c01 = lerp(vol.at(i0, j0, k1), vol.at(i1, j0, k1), fx);
    double c11 = lerp(vol.at(i0, j1, k1), vol.at(i1, j1, k1), fx);
    return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

VolumeGrid resample_isotropic(const VolumeGrid& vol, double target_spacing,
                              std::optional<double> fill) {
    require(std::isfinite(target_spacing) && target_spacing > 0.0,
            "resample_isotropic: target_spacing must be positive and finite");
    const Dims3& d = vol.dims();
    const Vec3d& sp = vol.spacing();
    const double fv = fill.value_or(vol.min_value());

    Dims3 out_dims;
    out_dims.nx = std::max<uint32_t>(1, uint32_t(std::llround(double(d.nx) * sp.x / target_spacing)));
    out_dims.ny = std::max<uint32_t>(1, uint32_t(std::llround(double(d.ny) * sp.y / target_spacing)));
    out_dims.nz = std::max<uint32_t>(1, uint32_t(std::llround(double(d.nz) * sp.z / target_spacing)));

    // Output voxel i' sits at physical origin + i'*t, i.e. source voxel
    // coordinate i' * t / spacing; an exact 1x ratio degenerates to identity.
    const double rx = target_spacing / sp.x;
    const double ry = target_spacing / sp.y;
    const double rz = target_spacing / sp.z;

    std::vector<double> out(out_dims.voxel_count());
    std::size_t idx = 0;
    for (uint32_t k = 0; k < out_dims.nz; ++k) {
        const double z = double(k) * rz;
        for (uint32_t j = 0; j < out_dims.ny; ++j) {
            const double y = double(j) * ry;
            for (uint32_t i = 0; i < out_dims.nx; ++i, ++idx) {
                out[idx] = trilinear_sample(vol, double(i) * rx, y, z, fv);
            }
        }
    }
    return VolumeGrid(out_dims, {target_spacing, target_spacing, target_spacing}, vol.origin(), std::move(out));
}

VolumeGrid crop_or_pad_symmetric(const VolumeGrid& vol, Dims3 target, double fill) {
    require(target.nx > 0 && target.ny > 0 && target.nz > 0, "crop_or_pad_symmetric: target dims must be positive");
    const Dims3& d = vol.dims();

    // lead[a]: index of the source voxel mapped to output index 0 (may be
    // negative when padding). Odd excess/deficit puts the extra voxel trailing.
    int64_t lead[3];
    for (int a = 0; a < 3; ++a) {
        int64_t src = int64_t(d[a]), dst = int64_t(target[a]);
        lead[a] = src >= dst ? (src - dst) / 2 : -((dst - src) / 2);
    }

    std::vector<double> out(target.voxel_count(), fill);
    for (uint32_t k = 0; k < target.nz; ++k) {
        int64_t sk = int64_t(k) + lead[2];
        if (sk < 0 || sk >= int64_t(d.nz)) continue;
        for (uint32_t j = 0; j < target.ny; ++j) {
            int64_t sj = int64_t(j) + lead[1];
            if (sj < 0 || sj >= int64_t(d.ny)) continue;
            int64_t si_begin = std::max<int64_t>(0, -lead[0]);
            int64_t si_end = std::min<int64_t>(target.nx, int64_t(d.nx) - lead[0]);
            for (int64_t i = si_begin; i < si_end; ++i) {
                out[(std::size_t(k) * target.ny + j) * target.nx + std::size_t(i)] =
                    vol.at(uint32_t(i + lead[0]), uint32_t(sj), uint32_t(sk));
            }
        }
    }

    Vec3d origin = vol.origin();
    origin.x += double(lead[0]) * vol.spacing().x;
    origin.y += double(lead[1]) * vol.spacing().y;
    origin.z += double(lead[2]) * vol.spacing().z;
    return VolumeGrid(target, vol.spacing(), origin, std::move(out));
}

// --- VVR1 --------------------------------------------------------------------

namespace {
constexpr char kVvrMagic[4] = {'V', 'V', 'R', '1'};
constexpr uint32_t kVvrVersion = 1;
constexpr std::size_t kVvrHeaderSize = 4 + 4 + 12 + 12 + 12;
}  // namespace

VolumeGrid read_volume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("VVR1 read '" + path + "': cannot open file");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < kVvrHeaderSize) throw format_error("VVR1 read '" + path + "': truncated header");
    if (std::memcmp(p, kVvrMagic, 4) != 0) throw format_error("VVR1 read '" + path + "': bad magic");
    uint32_t version = get_u32(p + 4);
    if (version != kVvrVersion) {
        throw format_error("VVR1 read '" + path + "': unsupported version " + std::to_string(version));
    }
    Dims3 dims{get_u32(p + 8), get_u32(p + 12), get_u32(p + 16)};
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
        throw format_error("VVR1 read '" + path + "': bad dims");
    }
    Vec3d spacing{get_f32(p + 20), get_f32(p + 24), get_f32(p + 28)};
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0.0f) || !std::isfinite(spacing[a])) {
            throw format_error("VVR1 read '" + path + "': bad spacing");
        }
    }
    Vec3d origin{get_f32(p + 32), get_f32(p + 36), get_f32(p + 40)};

    std::size_t expect = dims.voxel_count() * 4;
    if (bytes.size() - kVvrHeaderSize != expect) {
        throw format_error("VVR1 read '" + path + "': payload size mismatch (header declares " +
                           std::to_string(expect) + " bytes, file has " +
                           std::to_string(bytes.size() - kVvrHeaderSize) + ")");
    }
    std::vector<double> data(dims.voxel_count());
    const unsigned char* q = p + kVvrHeaderSize;
    for (std::size_t n = 0; n < data.size(); ++n, q += 4) {
        data[n] = double(get_f32(q));
    }
    return VolumeGrid(dims, spacing, origin, std::move(data));
}

void write_volume(const VolumeGrid& vol, const std::string& path) {
    std::string bytes;
    bytes.reserve(kVvrHeaderSize + vol.data().size() * 4);
    bytes.append(kVvrMagic, 4);
    put_u32(bytes, kVvrVersion);
    for (int a = 0; a < 3; ++a) put_u32(bytes, vol.dims()[a]);
    for (int a = 0; a < 3; ++a) put_f32(bytes, float(vol.spacing()[a]));
    for (int a = 0; a < 3; ++a) put_f32(bytes, float(vol.origin()[a]));
    for (double v : vol.data()) put_f32(bytes, float(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("VVR1 write '" + path + "': cannot open file");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw format_error("VVR1 write '" + path + "': write failed");
}

}  // namespace pairloc
