// shapemodel.hpp: 6-d pair-shape statistics: build a PCA model from training
// landmark pairs, score test pairs by subspace Mahalanobis distance, and gate
// detections whose pair geometry exceeds the training envelope.
#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/common.hpp"
#include "detect/detector.hpp"

namespace pairloc {

/// Left xyz then right xyz with the pair centroid subtracted, so the first
/// and last three components always sum to zero.
struct EarPairShape {
    std::array<double, 6> s{};
};

struct ShapeModel {
    std::array<double, 6> mean{};
    std::vector<std::array<double, 6>> eigvecs;  // unit vectors, one per mode
    std::vector<double> eigvals;                 // matching variances, descending
    double m_max = 0.0;   // largest training Mahalanobis distance
    std::size_t n_train = 0;
};

/// Subtract the pair centroid and stack. Coincident points carry no pair
/// geometry and are rejected.
EarPairShape pair_to_shape(Vec3d left, Vec3d right);

/// PCA of the training shapes: arithmetic mean, population (1/N) covariance,
/// eigenpairs of the 6x6 covariance by cyclic Jacobi rotation. Modes with
/// variance at or below 1e-10 * trace are structural zeros (centroid removal
/// caps the rank at 3) and are dropped; at most k_max modes survive. m_max is
/// the largest Mahalanobis distance over the training shapes themselves.
ShapeModel fit_shape_model(std::span<const EarPairShape> shapes, int k_max = 3);

/// sqrt of sum over retained modes of (projection / sigma)^2. Deviation
/// orthogonal to every retained mode contributes nothing.
double mahalanobis(const EarPairShape& shape, const ShapeModel& model);

/// When both sides are present, convert the peak voxels to physical
/// coordinates, form the pair shape, and reject the weaker-response side if
/// the Mahalanobis distance exceeds m_max (ties reject the right side).
/// Coincident peaks cannot form a pair and reject the weaker side outright.
/// Anything else passes through unchanged.
DetectionResult apply_shape_constraint(const DetectionResult& result, const ShapeModel& model,
                                       Vec3d spacing, Vec3d origin);

nlohmann::json shape_model_to_json(const ShapeModel& model);
ShapeModel shape_model_from_json(const nlohmann::json& j);

void save_shape_model(const ShapeModel& model, const std::string& path);
ShapeModel load_shape_model(const std::string& path);

}  // namespace pairloc
