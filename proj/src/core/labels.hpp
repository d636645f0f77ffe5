// labels.hpp: per-side Gaussian target maps with contralateral suppression,
// and the class-balanced loss weights computed from them.
#pragma once

#include "core/annotation.hpp"
#include "core/volume.hpp"

namespace pairloc {

struct LabelConfig {
    double sigma = 3.0;             // voxels, on the resampled grid
    double floor_threshold = 0.05;  // unscaled magnitudes below this are zeroed
    bool suppression_enabled = true;
};

/// Class-balanced weights for one target map. With both counts positive,
/// w_none = n_zero/(n_none+n_zero) and w_zero = n_none/(n_none+n_zero); an
/// empty class overrides the surviving weight to 1 so the loss never vanishes.
struct WeightPair {
    double w_none = 0.0;
    double w_zero = 0.0;
    std::size_t n_none = 0;
    std::size_t n_zero = 0;
};

struct TargetPair {
    VolumeGrid left_map;
    VolumeGrid right_map;
    WeightPair weights_left;
    WeightPair weights_right;
};

/// Squared support radius in voxel^2: magnitudes survive the floor iff
/// ||v - c||^2 <= 2 sigma^2 ln(1/floor).
double gaussian_cutoff_radius_sq(const LabelConfig& cfg);

/// Map whose value at voxel v is sign * exp(-||v-c||^2 / (2 sigma^2)) where
/// the unscaled magnitude is >= cfg.floor_threshold, and exactly 0 elsewhere.
/// The magnitude at the center is exactly 1. sign must be +1 or -1.
VolumeGrid make_gaussian_map(Dims3 dims, VoxelIndex center, const LabelConfig& cfg, int sign,
                             Vec3d spacing = {1.0, 1.0, 1.0}, Vec3d origin = {0.0, 0.0, 0.0});

/// Per-side target maps for one annotated volume. A present side gets the +1
/// Gaussian at its landmark; an absent side stays all-zero. With suppression
/// enabled and the opposite side present, the -1 Gaussian at the opposite
/// landmark is added into this side's map. Overlapping supports sum and clamp
/// to [-1, 1]. Weights are computed from the finished maps.
TargetPair make_targets(const LandmarkAnnotation& ann, Dims3 dims, const LabelConfig& cfg,
                        Vec3d spacing = {1.0, 1.0, 1.0}, Vec3d origin = {0.0, 0.0, 0.0});

/// Count exact zeros vs non-zeros and apply the class-balance rule.
WeightPair compute_weights(const VolumeGrid& map);

}  // namespace pairloc
