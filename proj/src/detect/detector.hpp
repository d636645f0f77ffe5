// detector.hpp: threshold-on-peak presence decisions from a pair of response
// maps, and the B/L/R/N categorization of a result.
#pragma once

#include "core/annotation.hpp"
#include "core/volume.hpp"

namespace pairloc {

struct DetectorConfig {
    double p_thres = 0.5;  // presence requires peak strictly above this
};

/// One side's decision. peak_voxel/peak_value always describe the global
/// maximum of the side's map, even when the side is absent or rejected, so a
/// report records what the network responded before gating.
struct SideDetection {
    bool present = false;
    VoxelIndex peak_voxel;
    double peak_value = 0.0;
    bool rejected_by_shape = false;
};

struct DetectionResult {
    SideDetection left;
    SideDetection right;
};

/// Scan each map for its global maximum (ties: first voxel in x-fastest scan
/// order) and mark the side present iff the maximum exceeds p_thres strictly.
DetectionResult detect(const VolumeGrid& left_map, const VolumeGrid& right_map,
                       const DetectorConfig& cfg);

/// B both present, L left only, R right only, N neither. A side rejected by
/// the shape constraint counts as absent.
Category categorize(const DetectionResult& result);

}  // namespace pairloc
