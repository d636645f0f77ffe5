// annotation.hpp: per-volume ground truth: landmark presence, coordinates,
// distractors, and the B/L/R/N category.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "core/common.hpp"

namespace pairloc {

enum class Category : int { B = 0, L = 1, R = 2, N = 3 };

const char* category_name(Category c);
Category category_from_name(const std::string& name);
Category category_from_flags(bool left_present, bool right_present);

struct LandmarkAnnotation {
    std::string volume_id;
    bool left_present = false;
    bool right_present = false;
    VoxelIndex left_voxel;   // valid iff left_present
    VoxelIndex right_voxel;  // valid iff right_present
    std::vector<VoxelIndex> distractor_voxels;
    Category category = Category::N;
};

/// JSON object schema: volume_id, left_present, right_present, left_voxel
/// [i,j,k] when present, right_voxel likewise, optional distractor_voxels,
/// category in {B,L,R,N}.
nlohmann::json annotation_to_json(const LandmarkAnnotation& ann);
LandmarkAnnotation annotation_from_json(const nlohmann::json& j);

}  // namespace pairloc
