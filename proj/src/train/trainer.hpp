// trainer.hpp: SGD-with-momentum optimization loop over annotated volumes.
//
// Per sample: build the two signed target maps, forward the net, take the
// class-weighted squared-error loss per side (the two side losses are
// averaged), backpropagate, and step. Classical momentum:
//   velocity <- momentum * velocity - lr * grad;  params <- params + velocity.
// Parameters are stored as f32 and rounded after every step; velocity and all
// gradient arithmetic stay double.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/annotation.hpp"
#include "core/labels.hpp"
#include "core/volume.hpp"
#include "net/net.hpp"

namespace pairloc {

struct TrainSample {
    VolumeGrid volume;
    LandmarkAnnotation annotation;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    double momentum = 0.9;
    int batch_size = 1;  // > 1 averages gradients across the batch per step
    int epochs = 1;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

// All file emission is optional; the loop itself never touches disk unless
// asked. Checkpoints are written as ckpt_ep%06d.unc1 under checkpoint_dir
// every checkpoint_every epochs (0 = final epoch only). resume loads such a
// checkpoint and continues after the epoch encoded in its name; momentum
// velocity restarts at zero. loss_csv gets one "epoch,mean_loss,wall_seconds"
// row per epoch.
struct TrainIoOptions {
    std::string checkpoint_dir;
    int checkpoint_every = 0;
    std::string loss_csv;
    std::string resume;
};

struct TrainState {
    NetParams params;
    NetGrads velocity;
    int epoch = 0;  // completed epochs
    std::int64_t step = 0;
    std::vector<double> loss_history;  // mean sample loss per completed epoch
};

/// One parameter update from accumulated gradients. Throws a divergence error
/// naming state.step if any gradient value is non-finite.
void sgd_step(TrainState& state, const NetGrads& grads, const TrainConfig& cfg);

/// Runs cfg.epochs epochs (continuing from a resumed epoch count when
/// io.resume is set). Sample order per epoch is a seeded shuffle, re-derived
/// from (cfg.seed, epoch index) so a resumed run visits the same order an
/// uninterrupted run would.
TrainState train(const std::vector<TrainSample>& dataset, const NetArch& arch,
                 const TrainConfig& cfg, const LabelConfig& labels,
                 const TrainIoOptions& io = {});

/// Epoch number encoded in a ckpt_ep%06d.unc1 path, or -1 if the name does
/// not follow that pattern.
int checkpoint_epoch_from_path(const std::string& path);

}  // namespace pairloc
