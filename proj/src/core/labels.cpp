#include "core/labels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pairloc {
namespace {

void validate_config(const LabelConfig& cfg) {
    if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma))
        throw std::invalid_argument("labels: sigma must be positive");
    if (!(cfg.floor_threshold > 0.0) || !(cfg.floor_threshold < 1.0))
        throw std::invalid_argument("labels: floor_threshold must be in (0, 1)");
}

// Adds the signed Gaussian into buf. Evaluation is restricted to the bounding
// box of the support sphere; the survive-the-floor test is on the unscaled
// magnitude, so composed values can leave [-1,1] until the final clamp.
void accumulate_gaussian(std::vector<double>& buf, Dims3 dims, VoxelIndex center,
                         const LabelConfig& cfg, int sign) {
    if (!center.inside(dims))
        throw std::invalid_argument("labels: landmark voxel outside volume");
    const double inv_two_sigma_sq = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    const int ri = static_cast<int>(std::ceil(std::sqrt(gaussian_cutoff_radius_sq(cfg))));
    const int ci = static_cast<int>(center.i);
    const int cj = static_cast<int>(center.j);
    const int ck = static_cast<int>(center.k);
    const int i0 = std::max(0, ci - ri), i1 = std::min(static_cast<int>(dims.nx) - 1, ci + ri);
    const int j0 = std::max(0, cj - ri), j1 = std::min(static_cast<int>(dims.ny) - 1, cj + ri);
    const int k0 = std::max(0, ck - ri), k1 = std::min(static_cast<int>(dims.nz) - 1, ck + ri);
    for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const double di = i - ci, dj = j - cj, dk = k - ck;
                const double d_sq = di * di + dj * dj + dk * dk;
                const double mag = std::exp(-d_sq * inv_two_sigma_sq);
                if (mag < cfg.floor_threshold) continue;
                buf[(static_cast<std::size_t>(k) * dims.ny + j) * dims.nx + i] += sign * mag;
            }
}

void clamp_unit(std::vector<double>& buf) {
    for (double& v : buf) v = std::clamp(v, -1.0, 1.0);
}

}  // namespace

double gaussian_cutoff_radius_sq(const LabelConfig& cfg) {
    validate_config(cfg);
    return 2.0 * cfg.sigma * cfg.sigma * std::log(1.0 / cfg.floor_threshold);
}

VolumeGrid make_gaussian_map(Dims3 dims, VoxelIndex center, const LabelConfig& cfg, int sign,
                             Vec3d spacing, Vec3d origin) {
    validate_config(cfg);
    if (sign != 1 && sign != -1) throw std::invalid_argument("labels: sign must be +1 or -1");
    std::vector<double> buf(dims.voxel_count(), 0.0);
    accumulate_gaussian(buf, dims, center, cfg, sign);
    return VolumeGrid(dims, spacing, origin, std::move(buf));
}

TargetPair make_targets(const LandmarkAnnotation& ann, Dims3 dims, const LabelConfig& cfg,
                        Vec3d spacing, Vec3d origin) {
    validate_config(cfg);
    if (ann.left_present && ann.right_present && ann.left_voxel == ann.right_voxel)
        throw std::invalid_argument("labels: left and right landmarks share a voxel");

    std::vector<double> left(dims.voxel_count(), 0.0);
    std::vector<double> right(dims.voxel_count(), 0.0);
    if (ann.left_present) accumulate_gaussian(left, dims, ann.left_voxel, cfg, +1);
    if (ann.right_present) accumulate_gaussian(right, dims, ann.right_voxel, cfg, +1);
    if (cfg.suppression_enabled) {
        if (ann.right_present) accumulate_gaussian(left, dims, ann.right_voxel, cfg, -1);
        if (ann.left_present) accumulate_gaussian(right, dims, ann.left_voxel, cfg, -1);
    }
    clamp_unit(left);
    clamp_unit(right);

    TargetPair out{VolumeGrid(dims, spacing, origin, std::move(left)),
                   VolumeGrid(dims, spacing, origin, std::move(right)), WeightPair{},
                   WeightPair{}};
    out.weights_left = compute_weights(out.left_map);
    out.weights_right = compute_weights(out.right_map);
    return out;
}

WeightPair compute_weights(const VolumeGrid& map) {
    WeightPair w;
    for (double v : map.data())
        if (v == 0.0)
            ++w.n_zero;
        else
            ++w.n_none;
    const double total = static_cast<double>(w.n_none + w.n_zero);
    if (w.n_none == 0) {
        w.w_none = 0.0;
        w.w_zero = 1.0;
    } else if (w.n_zero == 0) {
        w.w_none = 1.0;
        w.w_zero = 0.0;
    } else {
        w.w_none = static_cast<double>(w.n_zero) / total;
        w.w_zero = static_cast<double>(w.n_none) / total;
    }
    return w;
}

}  // namespace pairloc
