#include "pcbls/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcbls/rng.hpp"

namespace pcbls {

namespace {

constexpr std::size_t kTap = 3;
constexpr std::size_t kTaps = kTap * kTap;

std::size_t expected_rank(Architecture arch) {
  switch (arch) {
  case Architecture::linear_softmax: return 2;
  case Architecture::mlp: return 3;
  case Architecture::tiny_fcn: return 4;
  }
  throw std::invalid_argument("unknown architecture");
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return i < 0 ? 0 : std::min(static_cast<std::size_t>(i), n - 1);
}

// Precomputed replicate-padding source index for every (output row, tap) pair.
struct PadIndex {
  std::vector<std::size_t> rows; // H x 3
  std::vector<std::size_t> cols; // W x 3

  explicit PadIndex(Spatial s) : rows(s.height * kTap), cols(s.width * kTap) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t t = 0; t < kTap; ++t) {
        rows[y * kTap + t] = clamp_index(static_cast<std::ptrdiff_t>(y + t) - 1, s.height);
      }
    }
    for (std::size_t x = 0; x < s.width; ++x) {
      for (std::size_t t = 0; t < kTap; ++t) {
        cols[x * kTap + t] = clamp_index(static_cast<std::ptrdiff_t>(x + t) - 1, s.width);
      }
    }
  }
};

// out[o] = b[o] + sum_i sum_taps w[o][i][ty][tx] * in[i][pad(y+ty-1)][pad(x+tx-1)]
void conv3x3_forward(std::span<const double> in, std::size_t cin, std::span<const double> w,
                     std::span<const double> b, std::size_t cout, Spatial s, const PadIndex& pad,
                     std::span<double> out) {
  const std::size_t hw = s.height * s.width;
  for (std::size_t o = 0; o < cout; ++o) {
    double* dst = out.data() + o * hw;
    std::fill(dst, dst + hw, b[o]);
    for (std::size_t i = 0; i < cin; ++i) {
      const double* src = in.data() + i * hw;
      const double* wk = w.data() + (o * cin + i) * kTaps;
      for (std::size_t y = 0; y < s.height; ++y) {
        for (std::size_t x = 0; x < s.width; ++x) {
          double acc = 0.0;
          for (std::size_t ty = 0; ty < kTap; ++ty) {
            const std::size_t row = pad.rows[y * kTap + ty] * s.width;
            for (std::size_t tx = 0; tx < kTap; ++tx) {
              acc += wk[ty * kTap + tx] * src[row + pad.cols[x * kTap + tx]];
            }
          }
          dst[y * s.width + x] += acc;
        }
      }
    }
  }
}

// Given d(out), adds scale-free d(w), d(b) and (optionally) d(in).
void conv3x3_backward(std::span<const double> in, std::size_t cin, std::span<const double> w, std::size_t cout,
                      Spatial s, const PadIndex& pad, std::span<const double> dout, std::span<double> dw,
                      std::span<double> db, std::span<double> din) {
  const std::size_t hw = s.height * s.width;
  for (std::size_t o = 0; o < cout; ++o) {
    const double* g = dout.data() + o * hw;
    double bsum = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      bsum += g[p];
    }
    db[o] += bsum;
    for (std::size_t i = 0; i < cin; ++i) {
      const double* src = in.data() + i * hw;
      const double* wk = w.data() + (o * cin + i) * kTaps;
      double* dwk = dw.data() + (o * cin + i) * kTaps;
      double* dsrc = din.empty() ? nullptr : din.data() + i * hw;
      for (std::size_t y = 0; y < s.height; ++y) {
        for (std::size_t x = 0; x < s.width; ++x) {
          const double gv = g[y * s.width + x];
          if (gv == 0.0) {
            continue;
          }
          for (std::size_t ty = 0; ty < kTap; ++ty) {
            const std::size_t row = pad.rows[y * kTap + ty] * s.width;
            for (std::size_t tx = 0; tx < kTap; ++tx) {
              const std::size_t idx = row + pad.cols[x * kTap + tx];
              dwk[ty * kTap + tx] += gv * src[idx];
              if (dsrc != nullptr) {
                dsrc[idx] += gv * wk[ty * kTap + tx];
              }
            }
          }
        }
      }
    }
  }
}

// dense: out[o] = b[o] + sum_i w[o][i] in[i]
void dense_forward(std::span<const double> in, std::span<const double> w, std::span<const double> b,
                   std::span<double> out) {
  const std::size_t n_in = in.size();
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double* row = w.data() + o * n_in;
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) {
      acc += row[i] * in[i];
    }
    out[o] = acc;
  }
}

void dense_backward(std::span<const double> in, std::span<const double> w, std::span<const double> dout,
                    std::span<double> dw, std::span<double> db, std::span<double> din) {
  const std::size_t n_in = in.size();
  for (std::size_t o = 0; o < dout.size(); ++o) {
    const double g = dout[o];
    db[o] += g;
    double* drow = dw.data() + o * n_in;
    const double* row = w.data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      drow[i] += g * in[i];
      if (!din.empty()) {
        din[i] += g * row[i];
      }
    }
  }
}

// Offsets of each parameter block in the flat vector.
struct Layout {
  struct Block {
    std::size_t w_offset;
    std::size_t w_count;
    std::size_t b_offset;
    std::size_t b_count;
    std::size_t fan_in;
  };
  std::vector<Block> blocks;
  std::size_t total = 0;

  void add(std::size_t w_count, std::size_t b_count, std::size_t fan_in) {
    blocks.push_back({total, w_count, total + w_count, b_count, fan_in});
    total += w_count + b_count;
  }
};

Layout layout_for(Architecture arch, const std::vector<std::size_t>& d) {
  if (d.size() != expected_rank(arch)) {
    throw std::invalid_argument(std::string("model dims have wrong rank for ") + std::string(to_string(arch)));
  }
  if (std::any_of(d.begin(), d.end(), [](std::size_t v) { return v == 0; })) {
    throw std::invalid_argument("model dims must be positive");
  }
  Layout l;
  switch (arch) {
  case Architecture::linear_softmax:
    l.add(d[1] * d[0], d[1], d[0]);
    break;
  case Architecture::mlp:
    l.add(d[1] * d[0], d[1], d[0]);
    l.add(d[2] * d[1], d[2], d[1]);
    break;
  case Architecture::tiny_fcn:
    l.add(d[1] * d[0] * kTaps, d[1], d[0] * kTaps);
    l.add(d[2] * d[1] * kTaps, d[2], d[1] * kTaps);
    l.add(d[3] * d[2] * kTaps, d[3], d[2] * kTaps);
    break;
  }
  return l;
}

Model make_initialized(Architecture arch, std::vector<std::size_t> dims, std::uint64_t seed) {
  const Layout layout = layout_for(arch, dims);
  std::vector<double> params(layout.total);
  Rng rng(seed);
  for (const auto& block : layout.blocks) {
    const double s = 1.0 / std::sqrt(static_cast<double>(block.fan_in));
    for (std::size_t i = 0; i < block.w_count + block.b_count; ++i) {
      params[block.w_offset + i] = rng.uniform(-s, s);
    }
  }
  return Model(arch, std::move(dims), std::move(params));
}

struct Weights {
  std::span<const double> w;
  std::span<const double> b;
};

Weights weights_of(std::span<const double> params, const Layout::Block& block) {
  return {params.subspan(block.w_offset, block.w_count), params.subspan(block.b_offset, block.b_count)};
}

struct GradSlots {
  std::span<double> w;
  std::span<double> b;
};

GradSlots slots_of(std::span<double> grad, const Layout::Block& block) {
  return {grad.subspan(block.w_offset, block.w_count), grad.subspan(block.b_offset, block.b_count)};
}

void check_input(const Model& model, std::span<const double> input, Spatial spatial) {
  std::size_t expected = model.input_size();
  if (model.is_dense()) {
    if (spatial.height == 0 || spatial.width == 0) {
      throw std::invalid_argument("tiny_fcn input needs a non-empty spatial extent");
    }
    expected *= spatial.height * spatial.width;
  }
  if (input.size() != expected) {
    throw std::invalid_argument("model input has " + std::to_string(input.size()) + " values, expected " +
                                std::to_string(expected));
  }
}

} // namespace

std::string_view to_string(Architecture arch) {
  switch (arch) {
  case Architecture::linear_softmax: return "linear_softmax";
  case Architecture::mlp: return "mlp";
  case Architecture::tiny_fcn: return "tiny_fcn";
  }
  return "unknown";
}

Architecture architecture_from_string(std::string_view name) {
  for (auto a : {Architecture::linear_softmax, Architecture::mlp, Architecture::tiny_fcn}) {
    if (to_string(a) == name) {
      return a;
    }
  }
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

Model::Model(Architecture arch, std::vector<std::size_t> dims, std::vector<double> params)
    : arch_(arch), dims_(std::move(dims)), params_(std::move(params)) {
  const std::size_t expected = parameter_count(arch_, dims_);
  if (params_.size() != expected) {
    throw std::invalid_argument("model has " + std::to_string(params_.size()) + " parameters, architecture needs " +
                                std::to_string(expected));
  }
}

std::size_t Model::parameter_count(Architecture arch, const std::vector<std::size_t>& dims) {
  return layout_for(arch, dims).total;
}

Model Model::linear_softmax(std::size_t inputs, std::size_t classes, std::uint64_t seed) {
  return make_initialized(Architecture::linear_softmax, {inputs, classes}, seed);
}

Model Model::mlp(std::size_t inputs, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
  return make_initialized(Architecture::mlp, {inputs, hidden, classes}, seed);
}

Model Model::tiny_fcn(std::size_t channels, std::size_t width1, std::size_t width2, std::size_t classes,
                      std::uint64_t seed) {
  return make_initialized(Architecture::tiny_fcn, {channels, width1, width2, classes}, seed);
}

Model Model::zeros(Architecture arch, std::vector<std::size_t> dims) {
  const std::size_t n = parameter_count(arch, dims);
  return Model(arch, std::move(dims), std::vector<double>(n, 0.0));
}

std::vector<double> forward(const Model& model, std::span<const double> input, Spatial spatial) {
  check_input(model, input, spatial);
  const Layout layout = layout_for(model.architecture(), model.dims());
  const auto& d = model.dims();
  const auto p = model.params();
  switch (model.architecture()) {
  case Architecture::linear_softmax: {
    std::vector<double> out(d[1]);
    auto [w, b] = weights_of(p, layout.blocks[0]);
    dense_forward(input, w, b, out);
    return out;
  }
  case Architecture::mlp: {
    std::vector<double> hidden(d[1]);
    auto [w1, b1] = weights_of(p, layout.blocks[0]);
    dense_forward(input, w1, b1, hidden);
    for (auto& h : hidden) {
      h = std::tanh(h);
    }
    std::vector<double> out(d[2]);
    auto [w2, b2] = weights_of(p, layout.blocks[1]);
    dense_forward(hidden, w2, b2, out);
    return out;
  }
  case Architecture::tiny_fcn: {
    const PadIndex pad(spatial);
    const std::size_t hw = spatial.height * spatial.width;
    std::vector<double> a1(d[1] * hw);
    std::vector<double> a2(d[2] * hw);
    std::vector<double> out(d[3] * hw);
    auto [w1, b1] = weights_of(p, layout.blocks[0]);
    conv3x3_forward(input, d[0], w1, b1, d[1], spatial, pad, a1);
    for (auto& v : a1) v = std::tanh(v);
    auto [w2, b2] = weights_of(p, layout.blocks[1]);
    conv3x3_forward(a1, d[1], w2, b2, d[2], spatial, pad, a2);
    for (auto& v : a2) v = std::tanh(v);
    auto [w3, b3] = weights_of(p, layout.blocks[2]);
    conv3x3_forward(a2, d[2], w3, b3, d[3], spatial, pad, out);
    return out;
  }
  }
  throw std::invalid_argument("unknown architecture");
}

double accumulate_gradient(const Model& model, std::span<const double> input, Spatial spatial,
                           const LogitLoss& loss, double scale, std::span<double> grad) {
  check_input(model, input, spatial);
  if (grad.size() != model.parameter_count()) {
    throw std::invalid_argument("gradient buffer length does not match parameter count");
  }
  const Layout layout = layout_for(model.architecture(), model.dims());
  const auto& d = model.dims();
  const auto p = model.params();

  // Gradients are accumulated into a local buffer first so scale applies once.
  std::vector<double> local(grad.size(), 0.0);
  double value = 0.0;

  switch (model.architecture()) {
  case Architecture::linear_softmax: {
    std::vector<double> logits(d[1]);
    auto [w, b] = weights_of(p, layout.blocks[0]);
    dense_forward(input, w, b, logits);
    std::vector<double> dlogits(d[1], 0.0);
    value = loss(logits, dlogits);
    auto [gw, gb] = slots_of(local, layout.blocks[0]);
    dense_backward(input, w, dlogits, gw, gb, {});
    break;
  }
  case Architecture::mlp: {
    std::vector<double> hidden(d[1]);
    auto [w1, b1] = weights_of(p, layout.blocks[0]);
    dense_forward(input, w1, b1, hidden);
    for (auto& h : hidden) h = std::tanh(h);
    std::vector<double> logits(d[2]);
    auto [w2, b2] = weights_of(p, layout.blocks[1]);
    dense_forward(hidden, w2, b2, logits);
    std::vector<double> dlogits(d[2], 0.0);
    value = loss(logits, dlogits);
    std::vector<double> dhidden(d[1], 0.0);
    auto [gw2, gb2] = slots_of(local, layout.blocks[1]);
    dense_backward(hidden, w2, dlogits, gw2, gb2, dhidden);
    for (std::size_t i = 0; i < d[1]; ++i) {
      dhidden[i] *= 1.0 - hidden[i] * hidden[i];
    }
    auto [gw1, gb1] = slots_of(local, layout.blocks[0]);
    dense_backward(input, w1, dhidden, gw1, gb1, {});
    break;
  }
  case Architecture::tiny_fcn: {
    const PadIndex pad(spatial);
    const std::size_t hw = spatial.height * spatial.width;
    std::vector<double> a1(d[1] * hw);
    std::vector<double> a2(d[2] * hw);
    std::vector<double> logits(d[3] * hw);
    auto [w1, b1] = weights_of(p, layout.blocks[0]);
    auto [w2, b2] = weights_of(p, layout.blocks[1]);
    auto [w3, b3] = weights_of(p, layout.blocks[2]);
    conv3x3_forward(input, d[0], w1, b1, d[1], spatial, pad, a1);
    for (auto& v : a1) v = std::tanh(v);
    conv3x3_forward(a1, d[1], w2, b2, d[2], spatial, pad, a2);
    for (auto& v : a2) v = std::tanh(v);
    conv3x3_forward(a2, d[2], w3, b3, d[3], spatial, pad, logits);

    std::vector<double> dlogits(logits.size(), 0.0);
    value = loss(logits, dlogits);

    std::vector<double> da2(a2.size(), 0.0);
    auto [gw3, gb3] = slots_of(local, layout.blocks[2]);
    conv3x3_backward(a2, d[2], w3, d[3], spatial, pad, dlogits, gw3, gb3, da2);
    for (std::size_t i = 0; i < da2.size(); ++i) da2[i] *= 1.0 - a2[i] * a2[i];

    std::vector<double> da1(a1.size(), 0.0);
    auto [gw2, gb2] = slots_of(local, layout.blocks[1]);
    conv3x3_backward(a1, d[1], w2, d[2], spatial, pad, da2, gw2, gb2, da1);
    for (std::size_t i = 0; i < da1.size(); ++i) da1[i] *= 1.0 - a1[i] * a1[i];

    auto [gw1, gb1] = slots_of(local, layout.blocks[0]);
    conv3x3_backward(input, d[0], w1, d[1], spatial, pad, da1, gw1, gb1, {});
    break;
  }
  }

  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] += scale * local[i];
  }
  return value;
}

} // namespace pcbls
