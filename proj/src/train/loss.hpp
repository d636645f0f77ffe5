// loss.hpp: class-weighted mean squared error and its exact gradient.
#pragma once

#include <span>
#include <vector>

#include "core/labels.hpp"
#include "core/volume.hpp"

namespace pairloc {

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;  // d(loss)/d(pred), pred's layout
};

/// Voxel v gets weight w.w_none where target(v) != 0 and w.w_zero elsewhere
/// (exact-zero comparison, matching how the weights were counted).
/// loss = sum w(v) (pred - target)^2 / sum w(v); grad(v) = 2 w(v) (pred -
/// target)(v) / sum w(v). A zero weight total is rejected: the class-balance
/// overrides guarantee it cannot happen for maps produced by the label
/// generator.
LossResult weighted_mse(std::span<const double> pred, std::span<const double> target,
                        const WeightPair& w);

struct GridLossResult {
    double loss = 0.0;
    VolumeGrid grad;
};

GridLossResult weighted_mse(const VolumeGrid& pred, const VolumeGrid& target,
                            const WeightPair& w);

}  // namespace pairloc
