#include "train/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace pairloc {

LossResult weighted_mse(std::span<const double> pred, std::span<const double> target,
                        const WeightPair& w) {
    if (pred.size() != target.size())
        throw std::invalid_argument("weighted_mse: pred/target size mismatch");
    if (pred.empty()) throw std::invalid_argument("weighted_mse: empty input");
    if (!(w.w_none >= 0.0) || !(w.w_zero >= 0.0))
        throw std::invalid_argument("weighted_mse: negative weight");

    LossResult out;
    out.grad.resize(pred.size());
    double sum_w = 0.0;
    double sum_wse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double wv = target[i] != 0.0 ? w.w_none : w.w_zero;
        const double d = pred[i] - target[i];
        sum_w += wv;
        sum_wse += wv * d * d;
        out.grad[i] = 2.0 * wv * d;
    }
    if (sum_w == 0.0) throw std::invalid_argument("weighted_mse: zero total weight");
    const double inv = 1.0 / sum_w;
    out.loss = sum_wse * inv;
    for (double& gv : out.grad) gv *= inv;
    return out;
}

GridLossResult weighted_mse(const VolumeGrid& pred, const VolumeGrid& target,
                            const WeightPair& w) {
    if (!(pred.dims() == target.dims()))
        throw std::invalid_argument("weighted_mse: pred/target dims mismatch");
    LossResult r = weighted_mse(pred.data(), target.data(), w);
    return GridLossResult{r.loss,
                          VolumeGrid(pred.dims(), pred.spacing(), pred.origin(), std::move(r.grad))};
}

}  // namespace pairloc
