#include "spinn/unet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "spinn/error.hpp"

namespace spinn {

Tensor to_tensor(const VectorField& v) {
  const int n = v.grid().n();
  Tensor t(2, n, n);
  std::copy(v.c1().values().begin(), v.c1().values().end(), t.channel(0));
  std::copy(v.c2().values().begin(), v.c2().values().end(), t.channel(1));
  return t;
}

VectorField to_field(const Tensor& t, const Grid2D& grid) {
  if (t.channels != 2 || t.height != grid.n() || t.width != grid.n()) {
    throw ShapeMismatch("tensor " + std::to_string(t.channels) + "x" + std::to_string(t.height) +
                        "x" + std::to_string(t.width) + " is not a 2-component field on grid " +
                        std::to_string(grid.n()));
  }
  const auto p = t.plane();
  return {ScalarField(grid, std::vector<double>(t.data.begin(), t.data.begin() + p)),
          ScalarField(grid, std::vector<double>(t.data.begin() + p, t.data.end()))};
}

void UNetSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) throw InvalidArgument("U-Net needs channels");
  if (kernel != 3) throw InvalidArgument("only 3x3 filters are supported");
  if (channels.empty()) throw InvalidArgument("U-Net channel ladder is empty");
  if (channels.size() > 8) throw InvalidArgument("U-Net ladder too deep");
  for (int c : channels) {
    if (c < 1) throw InvalidArgument("U-Net channel counts must be positive");
  }
}

// --- building blocks -----------------------------------------------------------

namespace {

constexpr int kLanes = 8;

// Channels of x with a one-node ring of zeros, each (h + 2) x (w + 2).
void pad(const Tensor& x, std::vector<double>& out) {
  const int wp = x.width + 2;
  const std::size_t pplane = static_cast<std::size_t>(x.height + 2) * wp;
  out.assign(pplane * x.channels, 0.0);
  for (int c = 0; c < x.channels; ++c) {
    const double* src = x.channel(c);
    double* dst = out.data() + pplane * c;
    for (int r = 0; r < x.height; ++r) {
      std::copy_n(src + static_cast<std::size_t>(r) * x.width, x.width,
                  dst + static_cast<std::size_t>(r + 1) * wp + 1);
    }
  }
}

struct Padded {
  const double* data;
  int channels;
  int height;
  int width;
  int wp() const noexcept { return width + 2; }
  std::size_t pplane() const noexcept { return static_cast<std::size_t>(height + 2) * wp(); }
};

// y[o] += sum_c k[o][c] (*) x[c] over MB output channels and kLanes columns
// starting at (r, i0); k rows hold cin * 9 taps.
template <int MB>
void correlate_tile(const Padded& x, const double* k, double* y, int r, int i0) {
  const std::size_t yplane = static_cast<std::size_t>(x.height) * x.width;
  const std::size_t kstride = static_cast<std::size_t>(x.channels) * 9;
  const std::size_t at = static_cast<std::size_t>(r) * x.width + i0;
  double acc[MB][kLanes];
  for (int m = 0; m < MB; ++m) {
    for (int l = 0; l < kLanes; ++l) acc[m][l] = y[m * yplane + at + l];
  }
  for (int c = 0; c < x.channels; ++c) {
    const double* xc = x.data + x.pplane() * c;
    const double* kc = k + static_cast<std::size_t>(c) * 9;
    for (int ky = 0; ky < 3; ++ky) {
      const double* s = xc + static_cast<std::size_t>(r + ky) * x.wp() + i0;
      for (int kx = 0; kx < 3; ++kx) {
        for (int m = 0; m < MB; ++m) {
          const double kv = kc[m * kstride + ky * 3 + kx];
#pragma omp simd
          for (int l = 0; l < kLanes; ++l) acc[m][l] += kv * s[kx + l];
        }
      }
    }
  }
  for (int m = 0; m < MB; ++m) {
    for (int l = 0; l < kLanes; ++l) y[m * yplane + at + l] = acc[m][l];
  }
}

// Same sum for one output channel at columns [i0, width) of row r.
void correlate_tail(const Padded& x, const double* k, double* y, int r, int i0) {
  for (int i = i0; i < x.width; ++i) {
    double acc = y[static_cast<std::size_t>(r) * x.width + i];
    for (int c = 0; c < x.channels; ++c) {
      const double* xc = x.data + x.pplane() * c;
      const double* kc = k + static_cast<std::size_t>(c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const double* s = xc + static_cast<std::size_t>(r + ky) * x.wp() + i;
        for (int kx = 0; kx < 3; ++kx) acc += kc[ky * 3 + kx] * s[kx];
      }
    }
    y[static_cast<std::size_t>(r) * x.width + i] = acc;
  }
}

// y (cout planes) += 3x3 correlation of zero-padded x with k[cout][cin][3][3].
void correlate(const Padded& x, const double* k, int cout, double* y) {
  const std::size_t yplane = static_cast<std::size_t>(x.height) * x.width;
  const std::size_t kstride = static_cast<std::size_t>(x.channels) * 9;
  const int full = x.width - x.width % kLanes;
  int o = 0;
  auto block = [&]<int MB>() {
    for (; o + MB <= cout; o += MB) {
      for (int r = 0; r < x.height; ++r) {
        for (int i0 = 0; i0 < full; i0 += kLanes) {
          correlate_tile<MB>(x, k + kstride * o, y + yplane * o, r, i0);
        }
        for (int m = 0; m < MB; ++m) {
          correlate_tail(x, k + kstride * (o + m), y + yplane * (o + m), r, full);
        }
      }
    }
  };
  block.template operator()<4>();
  block.template operator()<2>();
  block.template operator()<1>();
}

thread_local std::vector<double> t_pad;
thread_local std::vector<double> t_flip;

}  // namespace

void conv3x3_forward(const Tensor& x, std::span<const double> weights, std::span<const double> bias,
                     Tensor& y) {
  const std::size_t plane = y.plane();
  for (int o = 0; o < y.channels; ++o) std::fill(y.channel(o), y.channel(o) + plane, bias[o]);
  pad(x, t_pad);
  correlate({t_pad.data(), x.channels, x.height, x.width}, weights.data(), y.channels,
            y.data.data());
}

void conv3x3_backward(const Tensor& x, const Tensor& grad_y, std::span<const double> weights,
                      std::span<double> grad_weights, std::span<double> grad_bias, Tensor* grad_x) {
  const int cin = x.channels;
  const int cout = grad_y.channels;
  const int h = x.height;
  const int w = x.width;
  const std::size_t plane = grad_y.plane();
  for (int o = 0; o < cout; ++o) {
    const double* go = grad_y.channel(o);
    double gb = 0.0;
#pragma omp simd reduction(+ : gb)
    for (std::size_t q = 0; q < plane; ++q) gb += go[q];
    grad_bias[o] += gb;
  }

  // Weight gradient: per-lane partial sums over rows, reduced once per tap.
  pad(x, t_pad);
  const Padded xp{t_pad.data(), cin, h, w};
  for (int o = 0; o < cout; ++o) {
    const double* go = grad_y.channel(o);
    for (int c = 0; c < cin; ++c) {
      const double* xc = xp.data + xp.pplane() * c;
      double part[9][kLanes] = {};
      double tail[9] = {};
      const int full = w - w % kLanes;
      for (int r = 0; r < h; ++r) {
        const double* g = go + static_cast<std::size_t>(r) * w;
        for (int i0 = 0; i0 < full; i0 += kLanes) {
          for (int ky = 0; ky < 3; ++ky) {
            const double* s = xc + static_cast<std::size_t>(r + ky) * xp.wp() + i0;
            for (int kx = 0; kx < 3; ++kx) {
#pragma omp simd
              for (int l = 0; l < kLanes; ++l) part[ky * 3 + kx][l] += g[i0 + l] * s[kx + l];
            }
          }
        }
        for (int i = full; i < w; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            const double* s = xc + static_cast<std::size_t>(r + ky) * xp.wp() + i;
            for (int kx = 0; kx < 3; ++kx) tail[ky * 3 + kx] += g[i] * s[kx];
          }
        }
      }
      double* gk = grad_weights.data() + (static_cast<std::size_t>(o) * cin + c) * 9;
      for (int t = 0; t < 9; ++t) {
        double sum = tail[t];
        for (int l = 0; l < kLanes; ++l) sum += part[t][l];
        gk[t] += sum;
      }
    }
  }

  if (!grad_x) return;
  // Input gradient: correlation of grad_y with the flipped, transposed kernel.
  t_flip.resize(static_cast<std::size_t>(cin) * cout * 9);
  for (int o = 0; o < cout; ++o) {
    for (int c = 0; c < cin; ++c) {
      const double* src = weights.data() + (static_cast<std::size_t>(o) * cin + c) * 9;
      double* dst = t_flip.data() + (static_cast<std::size_t>(c) * cout + o) * 9;
      for (int t = 0; t < 9; ++t) dst[t] = src[8 - t];
    }
  }
  pad(grad_y, t_pad);
  correlate({t_pad.data(), cout, h, w}, t_flip.data(), cin, grad_x->data.data());
}

Tensor avg_pool2(const Tensor& x) {
  Tensor y(x.channels, x.height / 2, x.width / 2);
  for (int c = 0; c < x.channels; ++c) {
    const double* s = x.channel(c);
    double* d = y.channel(c);
    for (int r = 0; r < y.height; ++r) {
      const double* a = s + static_cast<std::size_t>(2 * r) * x.width;
      const double* b = a + x.width;
      for (int i = 0; i < y.width; ++i) {
        d[static_cast<std::size_t>(r) * y.width + i] =
            0.25 * (a[2 * i] + a[2 * i + 1] + b[2 * i] + b[2 * i + 1]);
      }
    }
  }
  return y;
}

Tensor avg_pool2_backward(const Tensor& grad_y) {
  Tensor gx(grad_y.channels, grad_y.height * 2, grad_y.width * 2);
  for (int c = 0; c < grad_y.channels; ++c) {
    const double* g = grad_y.channel(c);
    double* d = gx.channel(c);
    for (int r = 0; r < gx.height; ++r) {
      for (int i = 0; i < gx.width; ++i) {
        d[static_cast<std::size_t>(r) * gx.width + i] =
            0.25 * g[static_cast<std::size_t>(r / 2) * grad_y.width + i / 2];
      }
    }
  }
  return gx;
}

Tensor upsample2(const Tensor& x) {
  Tensor y(x.channels, x.height * 2, x.width * 2);
  for (int c = 0; c < x.channels; ++c) {
    const double* s = x.channel(c);
    double* d = y.channel(c);
    for (int r = 0; r < y.height; ++r) {
      for (int i = 0; i < y.width; ++i) {
        d[static_cast<std::size_t>(r) * y.width + i] = s[static_cast<std::size_t>(r / 2) * x.width + i / 2];
      }
    }
  }
  return y;
}

Tensor upsample2_backward(const Tensor& grad_y) {
  Tensor gx(grad_y.channels, grad_y.height / 2, grad_y.width / 2);
  for (int c = 0; c < grad_y.channels; ++c) {
    const double* g = grad_y.channel(c);
    double* d = gx.channel(c);
    for (int r = 0; r < grad_y.height; ++r) {
      for (int i = 0; i < grad_y.width; ++i) {
        d[static_cast<std::size_t>(r / 2) * gx.width + i / 2] +=
            g[static_cast<std::size_t>(r) * grad_y.width + i];
      }
    }
  }
  return gx;
}

namespace {

Tensor concat(const Tensor& a, const Tensor& b) {
  Tensor out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor& activated, Tensor& grad) {
  for (std::size_t q = 0; q < grad.data.size(); ++q) {
    if (!(activated.data[q] > 0.0)) grad.data[q] = 0.0;
  }
}

}  // namespace

// --- UNet --------------------------------------------------------------------

UNet::UNet(UNetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto& ch = spec_.channels;
  const int levels = static_cast<int>(ch.size());
  auto add = [&](int in, int out, bool relu) {
    Conv c;
    c.in = in;
    c.out = out;
    c.relu = relu;
    c.weight_offset = parameter_count_;
    parameter_count_ += static_cast<std::size_t>(in) * out * 9;
    c.bias_offset = parameter_count_;
    parameter_count_ += static_cast<std::size_t>(out);
    convs_.push_back(c);
  };
  // Execution order: encoder levels, decoder levels (deepest first), output.
  add(spec_.in_channels, ch[0], true);
  add(ch[0], ch[0], true);
  for (int l = 1; l < levels; ++l) {
    add(ch[l - 1], ch[l], true);
    add(ch[l], ch[l], true);
  }
  for (int l = levels - 2; l >= 0; --l) {
    add(ch[l + 1] + ch[l], ch[l], true);
    add(ch[l], ch[l], true);
  }
  add(ch[0], spec_.out_channels, false);
}

std::vector<double> UNet::initial_parameters(std::uint64_t seed, double output_gain) const {
  std::vector<double> params(parameter_count_, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const Conv& c : convs_) {
    const double fan_in = 9.0 * c.in;
    const double stddev = c.relu ? std::sqrt(2.0 / fan_in) : output_gain * std::sqrt(1.0 / fan_in);
    const std::size_t count = static_cast<std::size_t>(c.in) * c.out * 9;
    for (std::size_t q = 0; q < count; ++q) params[c.weight_offset + q] = stddev * normal(rng);
  }
  return params;
}

void UNet::check(const Tensor& x, std::span<const double> params) const {
  if (params.size() != parameter_count_) {
    throw ShapeMismatch("U-Net expects " + std::to_string(parameter_count_) + " parameters, got " +
                        std::to_string(params.size()));
  }
  if (x.channels != spec_.in_channels) {
    throw ShapeMismatch("U-Net expects " + std::to_string(spec_.in_channels) +
                        " input channels, got " + std::to_string(x.channels));
  }
  const int m = spec_.size_multiple();
  if (x.height % m != 0 || x.width % m != 0 || x.height / m < 2 || x.width / m < 2) {
    throw ShapeMismatch("input " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                        " must be a multiple of " + std::to_string(m) +
                        " with at least 2x2 nodes at the deepest level");
  }
}

Tensor UNet::forward(const Tensor& x, std::span<const double> params, Cache* cache) const {
  check(x, params);
  const int levels = static_cast<int>(spec_.channels.size());
  std::size_t next = 0;
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  auto conv = [&](const Tensor& in) {
    const Conv& c = convs_[next++];
    Tensor out(c.out, in.height, in.width);
    conv3x3_forward(in,
                    params.subspan(c.weight_offset, static_cast<std::size_t>(c.in) * c.out * 9),
                    params.subspan(c.bias_offset, static_cast<std::size_t>(c.out)), out);
    if (c.relu) relu_inplace(out);
    if (cache) {
      cache->inputs.push_back(in);
      cache->outputs.push_back(out);
    }
    return out;
  };

  std::vector<Tensor> skips;
  skips.reserve(static_cast<std::size_t>(levels));
  skips.push_back(conv(conv(x)));
  for (int l = 1; l < levels; ++l) skips.push_back(conv(conv(avg_pool2(skips.back()))));
  Tensor d = skips.back();
  for (int l = levels - 2; l >= 0; --l) d = conv(conv(concat(upsample2(d), skips[l])));
  return conv(d);
}

Tensor UNet::backward(const Cache& cache, const Tensor& grad_output, std::span<const double> params,
                      std::span<double> grad_params) const {
  if (cache.inputs.size() != convs_.size()) throw ShapeMismatch("U-Net cache is incomplete");
  if (grad_params.size() != parameter_count_) throw ShapeMismatch("gradient buffer size mismatch");
  const auto& ch = spec_.channels;
  const int levels = static_cast<int>(ch.size());
  int idx = static_cast<int>(convs_.size());

  auto conv_back = [&](Tensor g) {
    const Conv& c = convs_[static_cast<std::size_t>(--idx)];
    if (c.relu) relu_backward_inplace(cache.outputs[static_cast<std::size_t>(idx)], g);
    const Tensor& in = cache.inputs[static_cast<std::size_t>(idx)];
    Tensor gx(in.channels, in.height, in.width);
    const std::size_t wcount = static_cast<std::size_t>(c.in) * c.out * 9;
    conv3x3_backward(in, g, params.subspan(c.weight_offset, wcount),
                     grad_params.subspan(c.weight_offset, wcount),
                     grad_params.subspan(c.bias_offset, static_cast<std::size_t>(c.out)), &gx);
    return gx;
  };

  std::vector<Tensor> skip_grads(static_cast<std::size_t>(levels));
  Tensor g = conv_back(grad_output);
  for (int l = 0; l <= levels - 2; ++l) {
    Tensor gcat = conv_back(conv_back(std::move(g)));
    const int up_ch = ch[static_cast<std::size_t>(l + 1)];
    Tensor gup(up_ch, gcat.height, gcat.width);
    Tensor gskip(gcat.channels - up_ch, gcat.height, gcat.width);
    const auto split = static_cast<std::ptrdiff_t>(gup.data.size());
    std::copy(gcat.data.begin(), gcat.data.begin() + split, gup.data.begin());
    std::copy(gcat.data.begin() + split, gcat.data.end(), gskip.data.begin());
    skip_grads[static_cast<std::size_t>(l)] = std::move(gskip);
    g = upsample2_backward(gup);
  }
  for (int l = levels - 1; l >= 0; --l) {
    if (l < levels - 1) {
      Tensor up = avg_pool2_backward(g);
      const Tensor& sg = skip_grads[static_cast<std::size_t>(l)];
      for (std::size_t q = 0; q < up.data.size(); ++q) up.data[q] += sg.data[q];
      g = std::move(up);
    }
    g = conv_back(conv_back(std::move(g)));
  }
  return g;
}

}  // namespace spinn
