#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spinn/fields.hpp"

namespace spinn {

/// Channels x height x width, row-major within a channel.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  double* channel(int k) noexcept { return data.data() + plane() * k; }
  const double* channel(int k) const noexcept { return data.data() + plane() * k; }
};

Tensor to_tensor(const VectorField& v);
VectorField to_field(const Tensor& t, const Grid2D& grid);

/// Encoder/decoder with skip connections and 3x3 convolutions.
///
/// Level l of the encoder runs two conv+ReLU layers with channels[l] filters;
/// 2x2 average pooling separates the levels. The decoder upsamples by
/// nearest neighbour, concatenates the matching encoder output and applies
/// two more conv+ReLU layers. A final linear 3x3 convolution maps to the
/// output channels. Spatial size is preserved end to end.
struct UNetSpec {
  int in_channels = 2;
  int out_channels = 2;
  int kernel = 3;
  std::vector<int> channels = {16, 32, 64};

  void validate() const;
  /// Grid sizes must be divisible by this.
  int size_multiple() const noexcept { return 1 << (channels.size() - 1); }
  friend bool operator==(const UNetSpec&, const UNetSpec&) = default;
};

class UNet {
 public:
  struct Conv {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;  // out x in x 3 x 3
    std::size_t bias_offset = 0;
    bool relu = true;
  };

  /// Activations kept by forward() for the reverse pass.
  struct Cache {
    std::vector<Tensor> inputs;   // input of each conv, in execution order
    std::vector<Tensor> outputs;  // output of each conv after its activation
  };

  explicit UNet(UNetSpec spec);

  const UNetSpec& spec() const noexcept { return spec_; }
  std::size_t parameter_count() const noexcept { return parameter_count_; }
  const std::vector<Conv>& layers() const noexcept { return convs_; }

  /// Fan-in scaled normal initialisation: He for ReLU layers, LeCun scaled
  /// by output_gain for the linear output layer. Biases start at zero.
  std::vector<double> initial_parameters(std::uint64_t seed, double output_gain = 1.0) const;

  Tensor forward(const Tensor& x, std::span<const double> params, Cache* cache = nullptr) const;

  /// Reverse pass from d(loss)/d(output). Adds parameter gradients into
  /// grad_params and returns d(loss)/d(input).
  Tensor backward(const Cache& cache, const Tensor& grad_output, std::span<const double> params,
                  std::span<double> grad_params) const;

 private:
  void check(const Tensor& x, std::span<const double> params) const;

  UNetSpec spec_;
  std::vector<Conv> convs_;
  std::size_t parameter_count_ = 0;
};

// Building blocks, exposed for testing.
void conv3x3_forward(const Tensor& x, std::span<const double> weights, std::span<const double> bias,
                     Tensor& y);
void conv3x3_backward(const Tensor& x, const Tensor& grad_y, std::span<const double> weights,
                      std::span<double> grad_weights, std::span<double> grad_bias, Tensor* grad_x);
Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& grad_y);
Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& grad_y);

}  // namespace spinn
