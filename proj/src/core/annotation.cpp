#include "core/annotation.hpp"

namespace pairloc {

const char* category_name(Category c) {
    switch (c) {
        case Category::B: return "B";
        case Category::L: return "L";
        case Category::R: return "R";
        case Category::N: return "N";
    }
    throw std::invalid_argument("category_name: bad category value");
}

Category category_from_name(const std::string& name) {
    if (name == "B") return Category::B;
    if (name == "L") return Category::L;
    if (name == "R") return Category::R;
    if (name == "N") return Category::N;
    throw format_error("unknown category '" + name + "'");
}

Category category_from_flags(bool left_present, bool right_present) {
    if (left_present && right_present) return Category::B;
    if (left_present) return Category::L;
    if (right_present) return Category::R;
    return Category::N;
}

namespace {
nlohmann::json voxel_to_json(const VoxelIndex& v) {
    return nlohmann::json::array({v.i, v.j, v.k});
}

VoxelIndex voxel_from_json(const nlohmann::json& j, const char* field) {
    if (!j.is_array() || j.size() != 3) {
        throw format_error(std::string("annotation: ") + field + " must be a [i,j,k] triple");
    }
    return VoxelIndex{j[0].get<uint32_t>(), j[1].get<uint32_t>(), j[2].get<uint32_t>()};
}
}  // namespace

nlohmann::json annotation_to_json(const LandmarkAnnotation& ann) {
    nlohmann::json j;
    j["volume_id"] = ann.volume_id;
    j["left_present"] = ann.left_present;
    j["right_present"] = ann.right_present;
    if (ann.left_present) j["left_voxel"] = voxel_to_json(ann.left_voxel);
    if (ann.right_present) j["right_voxel"] = voxel_to_json(ann.right_voxel);
    if (!ann.distractor_voxels.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : ann.distractor_voxels) arr.push_back(voxel_to_json(v));
        j["distractor_voxels"] = arr;
    }
    j["category"] = category_name(ann.category);
    return j;
}

LandmarkAnnotation annotation_from_json(const nlohmann::json& j) {
    LandmarkAnnotation ann;
    try {
        ann.volume_id = j.at("volume_id").get<std::string>();
        ann.left_present = j.at("left_present").get<bool>();
        ann.right_present = j.at("right_present").get<bool>();
        if (ann.left_present) ann.left_voxel = voxel_from_json(j.at("left_voxel"), "left_voxel");
        if (ann.right_present) ann.right_voxel = voxel_from_json(j.at("right_voxel"), "right_voxel");
        if (j.contains("distractor_voxels")) {
            for (const auto& v : j.at("distractor_voxels")) {
                ann.distractor_voxels.push_back(voxel_from_json(v, "distractor_voxels"));
            }
        }
        if (j.contains("category")) {
            ann.category = category_from_name(j.at("category").get<std::string>());
            if (ann.category != category_from_flags(ann.left_present, ann.right_present)) {
                throw format_error("annotation '" + ann.volume_id + "': category inconsistent with presence flags");
            }
        } else {
            ann.category = category_from_flags(ann.left_present, ann.right_present);
        }
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("annotation: ") + e.what());
    }
    return ann;
}

}  // namespace pairloc
