#include "phantom/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace pairloc {
namespace {

constexpr double kEarCoreFactor = 0.6;       // interior of the shell
constexpr double kDistractorRadiusFactor = 0.5;
constexpr double kDistractorOffsetFactor = 1.6;  // of ear radius, lateral and superior

Vec3d grid_origin(const PhantomConfig& cfg) {
    return {-cfg.spacing_mm * (cfg.dims.nx - 1) / 2.0, -cfg.spacing_mm * (cfg.dims.ny - 1) / 2.0,
            -cfg.spacing_mm * (cfg.dims.nz - 1) / 2.0};
}

void validate_config(const PhantomConfig& cfg) {
    if (cfg.dims.voxel_count() == 0) throw std::invalid_argument("phantom: empty dims");
    if (!(cfg.spacing_mm > 0.0)) throw std::invalid_argument("phantom: spacing must be positive");
    if (!(cfg.ear_radius_mm > 0.0) || !(cfg.ear_intensity > 0.0))
        throw std::invalid_argument("phantom: ear template must have positive radius and intensity");
    if (!(cfg.ear_separation_mm > 0.0))
        throw std::invalid_argument("phantom: ear separation must be positive");
    if (cfg.ear_jitter_mm < 0.0) throw std::invalid_argument("phantom: negative jitter");
    if (cfg.distractor_probability < 0.0 || cfg.distractor_probability > 1.0)
        throw std::invalid_argument("phantom: distractor probability outside [0,1]");
    if (cfg.noise_sigma_clean < 0.0 || cfg.noise_sigma_lowdose < 0.0)
        throw std::invalid_argument("phantom: negative noise sigma");

    // Worst-case jitter must keep both ear templates inside the grid, with the
    // crop margin to spare so single-ear crops stay feasible.
    const double margin_mm =
        (std::ceil(cfg.ear_radius_mm / cfg.spacing_mm) + 1.0) * cfg.spacing_mm;
    const double reach_x = cfg.ear_separation_mm / 2.0 + cfg.ear_jitter_mm + margin_mm;
    const double half_x = cfg.spacing_mm * (cfg.dims.nx - 1) / 2.0;
    const double reach_yz = cfg.ear_jitter_mm + margin_mm;
    const double half_y = cfg.spacing_mm * (cfg.dims.ny - 1) / 2.0;
    const double half_z = cfg.spacing_mm * (cfg.dims.nz - 1) / 2.0;
    if (reach_x > half_x || reach_yz > half_y || reach_yz > half_z)
        throw std::invalid_argument("phantom: ear templates do not fit inside dims at maximal jitter");
    // The no-ear crop needs a nonempty band between the two margins, with
    // voxel-snapping slop.
    const double inner_gap = cfg.ear_separation_mm - 2.0 * (cfg.ear_jitter_mm + margin_mm);
    if (inner_gap <= 3.0 * cfg.spacing_mm)
        throw std::invalid_argument("phantom: ears too close for the between-ears crop");
}

VoxelIndex snap_to_voxel(Vec3d p_mm, const PhantomConfig& cfg) {
    const Vec3d o = grid_origin(cfg);
    const auto snap = [&](double p, double org, uint32_t n) {
        const long v = std::lround((p - org) / cfg.spacing_mm);
        return uint32_t(std::clamp(v, 0L, long(n) - 1));
    };
    return {snap(p_mm.x, o.x, cfg.dims.nx), snap(p_mm.y, o.y, cfg.dims.ny),
            snap(p_mm.z, o.z, cfg.dims.nz)};
}

Vec3d voxel_to_mm(VoxelIndex v, const PhantomConfig& cfg) {
    const Vec3d o = grid_origin(cfg);
    return {o.x + v.i * cfg.spacing_mm, o.y + v.j * cfg.spacing_mm, o.z + v.k * cfg.spacing_mm};
}

// Head ellipsoid into an all-air buffer.
void draw_head(std::vector<double>& buf, const PhantomConfig& cfg) {
    const Vec3d o = grid_origin(cfg);
    std::size_t n = 0;
    for (uint32_t k = 0; k < cfg.dims.nz; ++k)
        for (uint32_t j = 0; j < cfg.dims.ny; ++j)
            for (uint32_t i = 0; i < cfg.dims.nx; ++i, ++n) {
                const double x = (o.x + i * cfg.spacing_mm) / cfg.head_semi_axes_mm.x;
                const double y = (o.y + j * cfg.spacing_mm) / cfg.head_semi_axes_mm.y;
                const double z = (o.z + k * cfg.spacing_mm) / cfg.head_semi_axes_mm.z;
                if (x * x + y * y + z * z <= 1.0) buf[n] = cfg.head_intensity;
            }
}

// Shell of one voxel-spacing thickness with a dimmer filled interior,
// centered on the physical position of `center`.
void draw_ear(std::vector<double>& buf, VoxelIndex center, const PhantomConfig& cfg) {
    const Vec3d c = voxel_to_mm(center, cfg);
    const double r_out = cfg.ear_radius_mm;
    const double r_in = std::max(r_out - cfg.spacing_mm, 0.5 * r_out);
    const int reach = int(std::ceil(r_out / cfg.spacing_mm));
    for (int dk = -reach; dk <= reach; ++dk)
        for (int dj = -reach; dj <= reach; ++dj)
            for (int di = -reach; di <= reach; ++di) {
                const int i = int(center.i) + di, j = int(center.j) + dj, k = int(center.k) + dk;
                if (i < 0 || j < 0 || k < 0 || i >= int(cfg.dims.nx) || j >= int(cfg.dims.ny) ||
                    k >= int(cfg.dims.nz))
                    continue;
                const Vec3d p = voxel_to_mm({uint32_t(i), uint32_t(j), uint32_t(k)}, cfg);
                const Vec3d d = p - c;
                const double dist = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
                if (dist > r_out) continue;
                buf[(std::size_t(k) * cfg.dims.ny + j) * cfg.dims.nx + i] =
                    dist >= r_in ? cfg.ear_intensity : kEarCoreFactor * cfg.ear_intensity;
            }
}

void draw_blob(std::vector<double>& buf, Dims3 dims, VoxelIndex center, double radius_vox,
               double intensity) {
    const int reach = int(std::ceil(radius_vox));
    for (int dk = -reach; dk <= reach; ++dk)
        for (int dj = -reach; dj <= reach; ++dj)
            for (int di = -reach; di <= reach; ++di) {
                const int i = int(center.i) + di, j = int(center.j) + dj, k = int(center.k) + dk;
                if (i < 0 || j < 0 || k < 0 || i >= int(dims.nx) || j >= int(dims.ny) ||
                    k >= int(dims.nz))
                    continue;
                if (double(di) * di + double(dj) * dj + double(dk) * dk > radius_vox * radius_vox)
                    continue;
                buf[(std::size_t(k) * dims.ny + j) * dims.nx + i] = intensity;
            }
}

struct CropPlan {
    uint32_t x0 = 0;  // kept range [x0, x1)
    uint32_t x1 = 0;
    bool keep_left = false;
    bool keep_right = false;
};

CropPlan plan_crop(Category cat, VoxelIndex left, VoxelIndex right, const PhantomConfig& cfg) {
    const long margin = long(std::ceil(cfg.ear_radius_mm / cfg.spacing_mm)) + 1;
    long x0 = 0, x1 = long(cfg.dims.nx);
    bool keep_left = true, keep_right = true;
    switch (cat) {
        case Category::B: break;
        case Category::L:
            x1 = long(right.i) - margin;
            keep_right = false;
            break;
        case Category::R:
            x0 = long(left.i) + margin + 1;
            keep_left = false;
            break;
        case Category::N:
            x0 = long(left.i) + margin + 1;
            x1 = long(right.i) - margin;
            keep_left = keep_right = false;
            break;
    }
    const bool left_intact = !keep_left || (long(left.i) - margin >= x0 && long(left.i) + margin < x1);
    const bool right_intact =
        !keep_right || (long(right.i) - margin >= x0 && long(right.i) + margin < x1);
    if (x0 < 0 || x1 > long(cfg.dims.nx) || x0 >= x1 || !left_intact || !right_intact)
        throw std::invalid_argument("phantom: crop band collapsed; geometry infeasible");
    return CropPlan{uint32_t(x0), uint32_t(x1), keep_left, keep_right};
}

}  // namespace

const char* noise_profile_name(NoiseProfile p) {
    return p == NoiseProfile::Clean ? "clean" : "lowdose";
}

NoiseProfile noise_profile_from_name(const std::string& name) {
    if (name == "clean") return NoiseProfile::Clean;
    if (name == "lowdose") return NoiseProfile::LowDose;
    throw format_error("unknown noise profile '" + name + "'");
}

std::vector<PhantomSample> generate_phantoms(const PhantomConfig& cfg, int count_per_category) {
    validate_config(cfg);
    if (count_per_category < 1)
        throw std::invalid_argument("phantom: count_per_category must be positive");

    const std::array<Category, 4> round_order{Category::B, Category::L, Category::R, Category::N};
    std::vector<PhantomSample> out;
    out.reserve(std::size_t(count_per_category) * 4);

    for (int idx = 0; idx < count_per_category; ++idx) {
        for (std::size_t c = 0; c < round_order.size(); ++c) {
            const Category cat = round_order[c];
            const std::uint64_t global_index = std::uint64_t(idx) * 4 + c;
            Rng rng = Rng::stream(cfg.seed, global_index);

            // Whole-head geometry: jittered mirrored ear centers.
            const double half_sep = cfg.ear_separation_mm / 2.0;
            const double j = cfg.ear_jitter_mm;
            const Vec3d left_mm{-half_sep + rng.next_range(-j, j), rng.next_range(-j, j),
                                rng.next_range(-j, j)};
            const Vec3d right_mm{half_sep + rng.next_range(-j, j), rng.next_range(-j, j),
                                 rng.next_range(-j, j)};
            const VoxelIndex left_vox = snap_to_voxel(left_mm, cfg);
            const VoxelIndex right_vox = snap_to_voxel(right_mm, cfg);

            std::vector<double> base(cfg.dims.voxel_count(), 0.0);
            draw_head(base, cfg);
            draw_ear(base, left_vox, cfg);
            draw_ear(base, right_vox, cfg);

            // Crop in x past the unwanted ear(s), then pad back symmetrically.
            const CropPlan plan = plan_crop(cat, left_vox, right_vox, cfg);
            const uint32_t width = plan.x1 - plan.x0;
            const uint32_t lead_pad = (cfg.dims.nx - width) / 2;

            std::vector<double> buf(cfg.dims.voxel_count(), 0.0);
            for (uint32_t k = 0; k < cfg.dims.nz; ++k)
                for (uint32_t jy = 0; jy < cfg.dims.ny; ++jy)
                    for (uint32_t i = 0; i < width; ++i)
                        buf[(std::size_t(k) * cfg.dims.ny + jy) * cfg.dims.nx + lead_pad + i] =
                            base[(std::size_t(k) * cfg.dims.ny + jy) * cfg.dims.nx + plan.x0 + i];
            const auto shift = [&](VoxelIndex v) {
                return VoxelIndex{v.i - plan.x0 + lead_pad, v.j, v.k};
            };

            PhantomSample sample{
                VolumeGrid::filled(Dims3{1, 1, 1}, {1, 1, 1}, {0, 0, 0}, 0.0), {},
                (idx % 2 == 0) ? NoiseProfile::Clean : NoiseProfile::LowDose, false};
            LandmarkAnnotation& ann = sample.annotation;
            ann.left_present = plan.keep_left;
            ann.right_present = plan.keep_right;
            if (plan.keep_left) ann.left_voxel = shift(left_vox);
            if (plan.keep_right) ann.right_voxel = shift(right_vox);
            ann.category = category_from_flags(ann.left_present, ann.right_present);
            ann.volume_id = std::string(category_name(ann.category)) + "_" +
                            std::to_string(global_index);

            // Distractor: a filled ear-bright blob superior-lateral to a kept
            // ear, or superior of center in a no-ear volume.
            sample.has_distractor = rng.next_unit() < cfg.distractor_probability;
            if (sample.has_distractor) {
                const double r_d_vox = kDistractorRadiusFactor * cfg.ear_radius_mm / cfg.spacing_mm;
                const double off = kDistractorOffsetFactor * cfg.ear_radius_mm / cfg.spacing_mm;
                VoxelIndex anchor;
                double lateral = 0.0;
                if (ann.left_present && ann.right_present) {
                    const bool on_left = rng.next_below(2) == 0;
                    anchor = on_left ? ann.left_voxel : ann.right_voxel;
                    lateral = on_left ? -off : off;
                } else if (ann.left_present) {
                    anchor = ann.left_voxel;
                    lateral = -off;
                } else if (ann.right_present) {
                    anchor = ann.right_voxel;
                    lateral = off;
                } else {
                    anchor = {cfg.dims.nx / 2, cfg.dims.ny / 2, cfg.dims.nz / 2};
                }
                const int guard = int(std::ceil(r_d_vox));
                const auto clamp_axis = [&](double v, uint32_t n) {
                    return uint32_t(std::clamp(int(std::lround(v)), guard, int(n) - 1 - guard));
                };
                const VoxelIndex d_vox{clamp_axis(anchor.i + lateral, cfg.dims.nx),
                                       clamp_axis(double(anchor.j), cfg.dims.ny),
                                       clamp_axis(anchor.k + off, cfg.dims.nz)};
                draw_blob(buf, cfg.dims, d_vox, r_d_vox, cfg.distractor_intensity);
                ann.distractor_voxels.push_back(d_vox);
            }

            const double sigma = sample.noise_profile == NoiseProfile::Clean
                                     ? cfg.noise_sigma_clean
                                     : cfg.noise_sigma_lowdose;
            for (double& v : buf) v = double(float(v + sigma * rng.next_gaussian()));

            sample.volume = VolumeGrid(cfg.dims, {cfg.spacing_mm, cfg.spacing_mm, cfg.spacing_mm},
                                       grid_origin(cfg), std::move(buf));
            out.push_back(std::move(sample));
        }
    }
    return out;
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

Vec3d mat_apply(const Mat3& m, Vec3d v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Mat3 mat_inverse(const Mat3& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (std::fabs(det) < 1e-12)
        throw std::invalid_argument("augment: transform is numerically singular");
    const double inv = 1.0 / det;
    Mat3 r;
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
    return r;
}

Mat3 build_affine(const AugmentParams& p) {
    const double deg = std::acos(-1.0) / 180.0;
    const double ax = p.rotation_deg.x * deg, ay = p.rotation_deg.y * deg,
                 az = p.rotation_deg.z * deg;
    const Mat3 rx{{{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}}};
    const Mat3 ry{{{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}}};
    const Mat3 rz{{{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}}};
    const Mat3 shear{{{1, p.shear, 0}, {0, 1, 0}, {0, 0, 1}}};
    const Mat3 scale{{{p.scale, 0, 0}, {0, p.scale, 0}, {0, 0, p.scale}}};
    return mat_mul(mat_mul(mat_mul(rz, ry), rx), mat_mul(shear, scale));
}

void validate_params(const AugmentParams& p) {
    if (!(p.scale >= 0.9 && p.scale <= 1.1))
        throw std::invalid_argument("augment: scale outside [0.9, 1.1]");
    for (int a = 0; a < 3; ++a)
        if (std::fabs(p.rotation_deg[a]) > 10.0)
            throw std::invalid_argument("augment: rotation outside +-10 degrees");
    if (std::fabs(p.shear) > 0.1)
        throw std::invalid_argument("augment: shear outside +-0.1");
}

}  // namespace

PhantomSample augment_phantom(const PhantomSample& sample, const AugmentParams& params) {
    validate_params(params);
    const VolumeGrid& vol = sample.volume;
    const Dims3 dims = vol.dims();
    const Mat3 fwd = build_affine(params);
    const Mat3 inv = mat_inverse(fwd);
    const Vec3d center{(dims.nx - 1) / 2.0, (dims.ny - 1) / 2.0, (dims.nz - 1) / 2.0};
    const double fill = vol.min_value();

    std::vector<double> buf(dims.voxel_count());
    std::size_t n = 0;
    for (uint32_t k = 0; k < dims.nz; ++k)
        for (uint32_t j = 0; j < dims.ny; ++j)
            for (uint32_t i = 0; i < dims.nx; ++i, ++n) {
                const Vec3d src = mat_apply(inv, Vec3d{double(i), double(j), double(k)} - center) +
                                  center;
                buf[n] = double(float(trilinear_sample(vol, src.x, src.y, src.z, fill)));
            }

    PhantomSample out{VolumeGrid(dims, vol.spacing(), vol.origin(), std::move(buf)),
                      sample.annotation, sample.noise_profile, sample.has_distractor};
    LandmarkAnnotation& ann = out.annotation;

    const auto map_voxel = [&](VoxelIndex v, bool& ok) {
        const Vec3d dst = mat_apply(fwd, Vec3d{double(v.i), double(v.j), double(v.k)} - center) +
                          center;
        const long i = std::lround(dst.x), j = std::lround(dst.y), k = std::lround(dst.z);
        ok = i >= 0 && j >= 0 && k >= 0 && i < long(dims.nx) && j < long(dims.ny) &&
             k < long(dims.nz);
        return ok ? VoxelIndex{uint32_t(i), uint32_t(j), uint32_t(k)} : VoxelIndex{};
    };

    if (ann.left_present) {
        bool ok = false;
        const VoxelIndex v = map_voxel(ann.left_voxel, ok);
        ann.left_present = ok;
        if (ok) ann.left_voxel = v;
    }
    if (ann.right_present) {
        bool ok = false;
        const VoxelIndex v = map_voxel(ann.right_voxel, ok);
        ann.right_present = ok;
        if (ok) ann.right_voxel = v;
    }
    std::vector<VoxelIndex> kept;
    for (const VoxelIndex& d : ann.distractor_voxels) {
        bool ok = false;
        const VoxelIndex v = map_voxel(d, ok);
        if (ok) kept.push_back(v);
    }
    ann.distractor_voxels = std::move(kept);
    out.has_distractor = !ann.distractor_voxels.empty();
    ann.category = category_from_flags(ann.left_present, ann.right_present);
    return out;
}

AugmentParams random_augment_params(std::uint64_t seed) {
    Rng rng(seed);
    AugmentParams p;
    p.scale = rng.next_range(0.9, 1.1);
    p.rotation_deg = {rng.next_range(-10.0, 10.0), rng.next_range(-10.0, 10.0),
                      rng.next_range(-10.0, 10.0)};
    p.shear = rng.next_range(-0.1, 0.1);
    return p;
}

}  // namespace pairloc
