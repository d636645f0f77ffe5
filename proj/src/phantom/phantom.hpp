// phantom.hpp: deterministic synthetic head volumes: an ellipsoidal head, two
// mirrored shell "ears" whose centers are the landmarks, optional bright
// distractor blobs, two additive-noise profiles, and the crop rule that turns
// whole-head samples into single-ear and no-ear categories.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/annotation.hpp"
#include "core/volume.hpp"

namespace pairloc {

enum class NoiseProfile : int { Clean = 0, LowDose = 1 };

const char* noise_profile_name(NoiseProfile p);
NoiseProfile noise_profile_from_name(const std::string& name);

/// Geometry and sampling knobs. Physical coordinates put the grid center at
/// mm (0,0,0); the left ear sits at negative x, the right at positive x.
/// The ear template is a bright shell one voxel-spacing thick with an
/// interior filled at 0.6 * ear_intensity, so the landmark voxel (the shell
/// center) reads inside the [0.6, 1.0] * ear_intensity band.
struct PhantomConfig {
    Dims3 dims{32, 32, 32};
    double spacing_mm = 2.25;
    Vec3d head_semi_axes_mm{30.0, 26.0, 24.0};
    double head_intensity = 0.3;
    double ear_radius_mm = 5.0;
    double ear_intensity = 1.0;
    double ear_separation_mm = 40.0;  // between ear centers, before jitter
    double ear_jitter_mm = 2.0;       // per-axis uniform jitter of each center
    double distractor_probability = 0.2;
    double distractor_intensity = 1.0;  // defaults to the shell intensity
    double noise_sigma_clean = 0.01;
    double noise_sigma_lowdose = 0.05;
    std::uint64_t seed = 0;
};

struct PhantomSample {
    VolumeGrid volume;
    LandmarkAnnotation annotation;  // carries the B/L/R/N category
    NoiseProfile noise_profile = NoiseProfile::Clean;
    bool has_distractor = false;
};

/// Generate count_per_category samples of each category, interleaved
/// B,L,R,N per round. Every sample draws from its own substream of
/// cfg.seed keyed by global index, so the dataset is bit-identical across
/// runs and thread counts. L/R/N volumes are made by x-cropping a fresh
/// whole-head sample past the unwanted ear(s) and padding back to cfg.dims;
/// annotations are shifted accordingly. Within each category the noise
/// profile alternates clean, lowdose, clean, ... Voxel values are snapped to
/// f32 so VVR1 files reproduce in-memory volumes exactly.
std::vector<PhantomSample> generate_phantoms(const PhantomConfig& cfg, int count_per_category);

/// Affine deformation: scale, then shear (x += shear * y), then rotation
/// about x, y, z in that order, all about the grid center in voxel space
/// (phantom grids are isotropic). The volume is inverse-mapped with
/// trilinear interpolation (fill: volume minimum); landmark and distractor
/// voxels map forward and round to the nearest voxel. A landmark carried
/// outside the grid makes its side absent and the category is recomputed.
struct AugmentParams {
    double scale = 1.0;        // in [0.9, 1.1]
    Vec3d rotation_deg{0, 0, 0};  // each within +-10
    double shear = 0.0;        // within +-0.1
};

PhantomSample augment_phantom(const PhantomSample& sample, const AugmentParams& params);

/// Uniform parameter draw over the admissible ranges above.
AugmentParams random_augment_params(std::uint64_t seed);

}  // namespace pairloc
