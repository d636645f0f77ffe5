#include "detect/detector.hpp"

#include <cmath>
#include <stdexcept>

namespace pairloc {
namespace {

SideDetection scan_side(const VolumeGrid& map, double p_thres) {
    SideDetection side;
    const Dims3 d = map.dims();
    std::size_t best = 0;
    double best_val = map.data()[0];
    for (std::size_t n = 1; n < map.data().size(); ++n) {
        if (map.data()[n] > best_val) {
            best_val = map.data()[n];
            best = n;
        }
    }
    side.peak_value = best_val;
    side.peak_voxel = {uint32_t(best % d.nx), uint32_t((best / d.nx) % d.ny),
                       uint32_t(best / (std::size_t(d.nx) * d.ny))};
    side.present = best_val > p_thres;
    return side;
}

}  // namespace

DetectionResult detect(const VolumeGrid& left_map, const VolumeGrid& right_map,
                       const DetectorConfig& cfg) {
    if (!std::isfinite(cfg.p_thres))
        throw std::invalid_argument("detect: p_thres must be finite");
    if (left_map.dims() != right_map.dims())
        throw std::invalid_argument("detect: side maps must share dims");
    return DetectionResult{scan_side(left_map, cfg.p_thres), scan_side(right_map, cfg.p_thres)};
}

Category categorize(const DetectionResult& result) {
    return category_from_flags(result.left.present, result.right.present);
}

}  // namespace pairloc
