// net_ops.hpp: convolution, pooling, upsampling, and activation primitives,
// forward and backward. All arithmetic is double; layer parameters live in
// float and are widened on use. Parallel work splits so that each item owns a
// disjoint output slab, keeping results identical for any thread count.
#pragma once

#include <cstdint>
#include <vector>

#include "net/tensor.hpp"

namespace pairloc {

// One convolution layer: cross-correlation, zero-padded to the input shape.
// ksize is 3 (spatial mixing) or 1 (channel mixing only). Weight layout is
// [out][in][kz][ky][kx], x fastest.
struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    int ksize = 3;
    std::vector<float> w;
    std::vector<float> b;

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize * ksize;
    }
    std::size_t param_count() const { return weight_count() + static_cast<std::size_t>(out_ch); }
};

struct ConvGrads {
    std::vector<double> w;
    std::vector<double> b;
};

Tensor conv_forward(const ConvLayer& layer, const Tensor& in);
// d(loss)/d(input) given d(loss)/d(output).
Tensor conv_backward_data(const ConvLayer& layer, const Tensor& dout);
// Accumulates into g, which must already be sized to the layer.
void conv_backward_params(const ConvLayer& layer, const Tensor& in, const Tensor& dout,
                          ConvGrads& g);

Tensor relu(const Tensor& pre);
// Gradient passes where the pre-activation was strictly positive; an input of
// exactly zero blocks it.
Tensor relu_backward(const Tensor& pre, const Tensor& dpost);

// 2x2x2 max pooling, stride 2. Dims must be even. argmax records, per output
// element, the flat index of the winning input element; ties go to the first
// element in (z, y, x) scan order.
Tensor maxpool2(const Tensor& in, std::vector<std::int64_t>& argmax);
Tensor maxpool2_backward(const Tensor& dout, const std::vector<std::int64_t>& argmax,
                         int channels, Dims3 in_dims);

// Nearest-neighbour 2x upsampling and its adjoint (each parent sums its
// eight children).
Tensor upsample2(const Tensor& in);
Tensor upsample2_backward(const Tensor& dout);

// Channel concatenation [a; b] and the matching split of a gradient.
Tensor concat(const Tensor& a, const Tensor& b);
void split(const Tensor& d, int ch_a, Tensor& da, Tensor& db);

}  // namespace pairloc
