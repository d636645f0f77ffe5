// net.hpp: volume-to-volume encoder-decoder with skip connections.
//
// depth counts the pooling steps. Level l runs at dims >> l with
// base_channels << l channels; the bottleneck sits below the last level at
// base_channels << depth. Each level is two 3x3x3 conv+ReLU blocks. Descent
// is 2x2x2 max pooling; ascent is nearest-neighbour upsampling followed by a
// 3x3x3 conv, then concatenation with the level's encoder output and two more
// conv+ReLU blocks. The head is a linear 1x1x1 conv, so outputs can carry
// signed targets.
//
// Layers live in one canonical sequence, which is also the checkpoint order:
//   encoder level 0..depth-1: conv_a, conv_b
//   bottleneck:               conv_a, conv_b
//   decoder level depth-1..0: upconv, conv_a, conv_b
//   head
// That is 5 * depth + 3 conv layers.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/volume.hpp"
#include "net/net_ops.hpp"
#include "net/tensor.hpp"

namespace pairloc {

struct NetArch {
    int depth = 3;
    int base_channels = 8;
    int in_channels = 1;
    int out_channels = 2;
};

struct NetParams {
    NetArch arch;
    std::vector<ConvLayer> layers;
};

struct NetGrads {
    std::vector<ConvGrads> layers;

    void zero();
    void add_scaled(const NetGrads& other, double scale);
    void scale(double factor);
};

// Everything backward() needs from the forward pass: each conv layer's input
// and pre-activation output, and the pooling winners per encoder level.
struct ForwardCache {
    std::vector<Tensor> conv_in;
    std::vector<Tensor> conv_pre;
    std::vector<std::vector<std::int64_t>> pool_argmax;
    std::vector<Dims3> pool_in_dims;
};

// Canonical-order layer indices.
int layer_count(const NetArch& arch);
int enc_a_index(const NetArch& arch, int level);
int enc_b_index(const NetArch& arch, int level);
int bottleneck_a_index(const NetArch& arch);
int bottleneck_b_index(const NetArch& arch);
int dec_up_index(const NetArch& arch, int level);
int dec_a_index(const NetArch& arch, int level);
int dec_b_index(const NetArch& arch, int level);
int head_index(const NetArch& arch);

std::size_t param_count(const NetArch& arch);

// Layers sized to the architecture, weights He-initialised (normal with
// std sqrt(2 / fan_in), one reproducible substream per layer), biases zero.
NetParams make_net(const NetArch& arch, std::uint64_t seed);

// Same weights and biases as all-zero gradient buffers.
NetGrads make_grads(const NetParams& params);

// Input dims must be divisible by 2^depth. cache may be null when no backward
// pass will follow. The result has out_channels channels at the input dims.
Tensor net_forward(const NetParams& params, const Tensor& input, ForwardCache* cache);
Tensor net_forward(const NetParams& params, const VolumeGrid& input, ForwardCache* cache);

// dloss_dout is d(loss)/d(head output); the same shape as the forward result.
NetGrads net_backward(const NetParams& params, const ForwardCache& cache,
                      const Tensor& dloss_dout);

Tensor tensor_from_volume(const VolumeGrid& vol);

// Checkpoint file: magic "UNC1", then u32 version (1), u32 depth,
// u32 base_channels, u64 total parameter count, then each layer's weights and
// biases in canonical order as little-endian f32. Stored values are exactly
// the in-memory floats, so save/load round-trips bit for bit.
void save_checkpoint(const NetParams& params, const std::string& path);
NetParams load_checkpoint(const std::string& path);

}  // namespace pairloc
