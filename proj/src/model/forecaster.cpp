#include "floral/model/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace floral::model {

const char* arch_name(Arch arch) {
  switch (arch) {
    case Arch::LinearAr: return "linear_ar";
    case Arch::Mlp: return "mlp";
    case Arch::VanillaRnn: return "rnn";
  }
  return "?";
}

Arch arch_from_name(const std::string& name) {
  if (name == "linear_ar" || name == "linear") return Arch::LinearAr;
  if (name == "mlp") return Arch::Mlp;
  if (name == "rnn" || name == "vanilla_rnn") return Arch::VanillaRnn;
  throw ConfigError("unknown model architecture: " + name);
}

void ModelSpec::validate() const {
  if (lookback < 1 || horizon < 1 || channels < 1)
    throw ConfigError("model: lookback, horizon and channels must be positive");
  if (arch == Arch::VanillaRnn && (hidden.empty() || hidden[0] < 1))
    throw ConfigError("model: rnn needs a positive hidden size");
  for (int h : hidden)
    if (h < 1) throw ConfigError("model: hidden sizes must be positive");
}

std::string ModelSpec::tag() const {
  std::string tag = arch_name(arch);
  if (arch != Arch::LinearAr) {
    tag += "[";
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      if (i) tag += ",";
      tag += std::to_string(hidden[i]);
      if (arch == Arch::VanillaRnn) break;  // rnn uses hidden[0] only
    }
    tag += "]";
  }
  tag += "/L" + std::to_string(lookback) + "/T" + std::to_string(horizon) + "/M" +
         std::to_string(channels);
  return tag;
}

namespace {

struct LayerDims {
  std::vector<int> sizes;  // d0, d1, ..., dk (input through output)
};

LayerDims mlp_dims(const ModelSpec& spec) {
  LayerDims dims;
  dims.sizes.push_back(spec.lookback * spec.channels);
  for (int h : spec.hidden) dims.sizes.push_back(h);
  dims.sizes.push_back(spec.horizon * spec.channels);
  return dims;
}

std::size_t dense_count(const LayerDims& dims) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < dims.sizes.size(); ++l)
    count += static_cast<std::size_t>(dims.sizes[l + 1]) * dims.sizes[l] + dims.sizes[l + 1];
  return count;
}

}  // namespace

std::size_t ModelSpec::param_count() const {
  const std::size_t in = static_cast<std::size_t>(lookback) * channels;
  const std::size_t out = static_cast<std::size_t>(horizon) * channels;
  switch (arch) {
    case Arch::LinearAr:
      return out * in + out;
    case Arch::Mlp:
      return dense_count(mlp_dims(*this));
    case Arch::VanillaRnn: {
      const std::size_t h = static_cast<std::size_t>(hidden[0]);
      return h * channels + h * h + h + out * h + out;
    }
  }
  return 0;
}

ParamVector init_params(const ModelSpec& spec, util::Rng& rng) {
  spec.validate();
  ParamVector params;
  params.tag = spec.tag();
  params.values.resize(spec.param_count());

  auto fill = [&](std::size_t offset, std::size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i)
      params.values[offset + i] = rng.uniform(-bound, bound);
  };

  switch (spec.arch) {
    case Arch::LinearAr: {
      fill(0, params.values.size(), spec.lookback * spec.channels);
      break;
    }
    case Arch::Mlp: {
      const LayerDims dims = mlp_dims(spec);
      std::size_t at = 0;
      for (std::size_t l = 0; l + 1 < dims.sizes.size(); ++l) {
        const std::size_t block =
            static_cast<std::size_t>(dims.sizes[l + 1]) * dims.sizes[l] + dims.sizes[l + 1];
        fill(at, block, dims.sizes[l]);
        at += block;
      }
      break;
    }
    case Arch::VanillaRnn: {
      const std::size_t h = static_cast<std::size_t>(spec.hidden[0]);
      const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
      std::size_t at = 0;
      fill(at, h * spec.channels, spec.channels);              // W_xh
      at += h * spec.channels;
      fill(at, h * h + h, static_cast<int>(h));                // W_hh, b_h
      at += h * h + h;
      fill(at, out * h + out, static_cast<int>(h));            // W_hy, b_y
      break;
    }
  }
  return params;
}

namespace {

void check_shapes(const ModelSpec& spec, const ParamVector& params, const data::Trace& input) {
  if (params.tag != spec.tag())
    throw ContractError("parameter tag '" + params.tag + "' does not match model '" + spec.tag() +
                        "'");
  if (params.values.size() != spec.param_count())
    throw ContractError("parameter vector has the wrong dimension");
  if (input.steps() != static_cast<std::size_t>(spec.lookback) ||
      input.channels() != static_cast<std::size_t>(spec.channels))
    throw InputError("input window shape does not match the model spec");
}

// ---- LinearAr ----------------------------------------------------------

void linear_forward(const ModelSpec& spec, std::span<const double> p,
                    std::span<const double> x, std::span<double> y) {
  const std::size_t in = static_cast<std::size_t>(spec.lookback) * spec.channels;
  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  const double* w = p.data();
  const double* b = p.data() + out * in;
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(const ModelSpec& spec, std::span<const double> x,
                     std::span<const double> dy, std::span<double> gp) {
  const std::size_t in = static_cast<std::size_t>(spec.lookback) * spec.channels;
  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  double* gw = gp.data();
  double* gb = gp.data() + out * in;
  for (std::size_t o = 0; o < out; ++o) {
    double* row = gw + o * in;
    for (std::size_t i = 0; i < in; ++i) row[i] += dy[o] * x[i];
    gb[o] += dy[o];
  }
}

// ---- Mlp ----------------------------------------------------------------

struct MlpScratch {
  std::vector<std::vector<double>> activations;  // a0 = input, ..., ak+1 = output
};

void mlp_forward(const ModelSpec& spec, std::span<const double> p, std::span<const double> x,
                 MlpScratch& scratch) {
  const LayerDims dims = mlp_dims(spec);
  const std::size_t layers = dims.sizes.size() - 1;
  scratch.activations.assign(dims.sizes.size(), {});
  scratch.activations[0].assign(x.begin(), x.end());

  std::size_t at = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t din = static_cast<std::size_t>(dims.sizes[l]);
    const std::size_t dout = static_cast<std::size_t>(dims.sizes[l + 1]);
    const double* w = p.data() + at;
    const double* b = p.data() + at + dout * din;
    at += dout * din + dout;

    auto& src = scratch.activations[l];
    auto& dst = scratch.activations[l + 1];
    dst.resize(dout);
    for (std::size_t o = 0; o < dout; ++o) {
      double acc = b[o];
      const double* row = w + o * din;
      for (std::size_t i = 0; i < din; ++i) acc += row[i] * src[i];
      dst[o] = (l + 1 < layers) ? std::tanh(acc) : acc;
    }
  }
}

void mlp_backward(const ModelSpec& spec, std::span<const double> p, const MlpScratch& scratch,
                  std::span<const double> dy, std::span<double> gp) {
  const LayerDims dims = mlp_dims(spec);
  const std::size_t layers = dims.sizes.size() - 1;

  std::vector<std::size_t> offsets(layers);
  std::size_t at = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = at;
    at += static_cast<std::size_t>(dims.sizes[l + 1]) * dims.sizes[l] + dims.sizes[l + 1];
  }

  std::vector<double> delta(dy.begin(), dy.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t din = static_cast<std::size_t>(dims.sizes[l]);
    const std::size_t dout = static_cast<std::size_t>(dims.sizes[l + 1]);
    const double* w = p.data() + offsets[l];
    double* gw = gp.data() + offsets[l];
    double* gb = gp.data() + offsets[l] + dout * din;
    const auto& src = scratch.activations[l];

    for (std::size_t o = 0; o < dout; ++o) {
      double* row = gw + o * din;
      for (std::size_t i = 0; i < din; ++i) row[i] += delta[o] * src[i];
      gb[o] += delta[o];
    }
    if (l == 0) break;
    std::vector<double> next(din, 0.0);
    for (std::size_t o = 0; o < dout; ++o) {
      const double* row = w + o * din;
      for (std::size_t i = 0; i < din; ++i) next[i] += row[i] * delta[o];
    }
    // tanh derivative through the activation of layer l.
    for (std::size_t i = 0; i < din; ++i) {
      const double a = scratch.activations[l][i];
      next[i] *= 1.0 - a * a;
    }
    delta = std::move(next);
  }
}

// ---- VanillaRnn ---------------------------------------------------------

struct RnnViews {
  std::size_t h = 0, m = 0, out = 0;
  std::size_t w_xh = 0, w_hh = 0, b_h = 0, w_hy = 0, b_y = 0;  // offsets
};

RnnViews rnn_views(const ModelSpec& spec) {
  RnnViews v;
  v.h = static_cast<std::size_t>(spec.hidden[0]);
  v.m = static_cast<std::size_t>(spec.channels);
  v.out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  v.w_xh = 0;
  v.w_hh = v.w_xh + v.h * v.m;
  v.b_h = v.w_hh + v.h * v.h;
  v.w_hy = v.b_h + v.h;
  v.b_y = v.w_hy + v.out * v.h;
  return v;
}

struct RnnScratch {
  std::vector<std::vector<double>> hidden;  // h_0 .. h_L (h_0 = zeros)
};

void rnn_forward(const ModelSpec& spec, std::span<const double> p, const data::Trace& input,
                 std::span<double> y, RnnScratch* scratch) {
  const RnnViews v = rnn_views(spec);
  const int L = spec.lookback;
  std::vector<double> h_prev(v.h, 0.0), h_cur(v.h, 0.0);
  if (scratch) {
    scratch->hidden.assign(static_cast<std::size_t>(L) + 1, {});
    scratch->hidden[0] = h_prev;
  }
  for (int t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < v.h; ++j) {
      double acc = p[v.b_h + j];
      const double* wx = p.data() + v.w_xh + j * v.m;
      for (std::size_t c = 0; c < v.m; ++c) acc += wx[c] * input.at(t, c);
      const double* wh = p.data() + v.w_hh + j * v.h;
      for (std::size_t k = 0; k < v.h; ++k) acc += wh[k] * h_prev[k];
      h_cur[j] = std::tanh(acc);
    }
    std::swap(h_prev, h_cur);
    if (scratch) scratch->hidden[static_cast<std::size_t>(t) + 1] = h_prev;
  }
  for (std::size_t o = 0; o < v.out; ++o) {
    double acc = p[v.b_y + o];
    const double* row = p.data() + v.w_hy + o * v.h;
    for (std::size_t k = 0; k < v.h; ++k) acc += row[k] * h_prev[k];
    y[o] = acc;
  }
}

void rnn_backward(const ModelSpec& spec, std::span<const double> p, const data::Trace& input,
                  const RnnScratch& scratch, std::span<const double> dy, std::span<double> gp) {
  const RnnViews v = rnn_views(spec);
  const int L = spec.lookback;
  const auto& h_last = scratch.hidden[static_cast<std::size_t>(L)];

  std::vector<double> dh(v.h, 0.0);
  for (std::size_t o = 0; o < v.out; ++o) {
    double* grow = gp.data() + v.w_hy + o * v.h;
    const double* row = p.data() + v.w_hy + o * v.h;
    for (std::size_t k = 0; k < v.h; ++k) {
      grow[k] += dy[o] * h_last[k];
      dh[k] += row[k] * dy[o];
    }
    gp[v.b_y + o] += dy[o];
  }

  for (int t = L - 1; t >= 0; --t) {
    const auto& h_t = scratch.hidden[static_cast<std::size_t>(t) + 1];
    const auto& h_prev = scratch.hidden[static_cast<std::size_t>(t)];
    std::vector<double> dpre(v.h);
    for (std::size_t j = 0; j < v.h; ++j) dpre[j] = dh[j] * (1.0 - h_t[j] * h_t[j]);

    for (std::size_t j = 0; j < v.h; ++j) {
      double* gx = gp.data() + v.w_xh + j * v.m;
      for (std::size_t c = 0; c < v.m; ++c) gx[c] += dpre[j] * input.at(t, c);
      double* gh = gp.data() + v.w_hh + j * v.h;
      for (std::size_t k = 0; k < v.h; ++k) gh[k] += dpre[j] * h_prev[k];
      gp[v.b_h + j] += dpre[j];
    }

    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t j = 0; j < v.h; ++j) {
      const double* wh = p.data() + v.w_hh + j * v.h;
      for (std::size_t k = 0; k < v.h; ++k) dh[k] += wh[k] * dpre[j];
    }
  }
}

std::vector<double> forward_values(const ModelSpec& spec, const ParamVector& params,
                                   const data::Trace& input) {
  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  std::vector<double> y(out, 0.0);
  switch (spec.arch) {
    case Arch::LinearAr:
      linear_forward(spec, params.values, input.values(), y);
      break;
    case Arch::Mlp: {
      MlpScratch scratch;
      mlp_forward(spec, params.values, input.values(), scratch);
      y = scratch.activations.back();
      break;
    }
    case Arch::VanillaRnn:
      rnn_forward(spec, params.values, input, y, nullptr);
      break;
  }
  return y;
}

// Accumulates the gradient for a set of window indices; scale = 2/(B*out).
void accumulate_grad(const ModelSpec& spec, const ParamVector& params,
                     std::span<const data::Window> windows, std::span<const std::size_t> idx,
                     ParamVector& g) {
  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  const double scale = 2.0 / (static_cast<double>(idx.size()) * static_cast<double>(out));

  std::vector<double> y(out), dy(out);
  for (std::size_t which : idx) {
    const data::Window& w = windows[which];
    switch (spec.arch) {
      case Arch::LinearAr: {
        linear_forward(spec, params.values, w.input.values(), y);
        for (std::size_t o = 0; o < out; ++o)
          dy[o] = scale * (y[o] - w.target.values()[o]);
        linear_backward(spec, w.input.values(), dy, g.values);
        break;
      }
      case Arch::Mlp: {
        MlpScratch scratch;
        mlp_forward(spec, params.values, w.input.values(), scratch);
        for (std::size_t o = 0; o < out; ++o)
          dy[o] = scale * (scratch.activations.back()[o] - w.target.values()[o]);
        mlp_backward(spec, params.values, scratch, dy, g.values);
        break;
      }
      case Arch::VanillaRnn: {
        RnnScratch scratch;
        rnn_forward(spec, params.values, w.input, y, &scratch);
        for (std::size_t o = 0; o < out; ++o)
          dy[o] = scale * (y[o] - w.target.values()[o]);
        rnn_backward(spec, params.values, w.input, scratch, dy, g.values);
        break;
      }
    }
  }
}

}  // namespace

data::Trace forward(const ModelSpec& spec, const ParamVector& params, const data::Trace& input) {
  spec.validate();
  check_shapes(spec, params, input);
  auto y = forward_values(spec, params, input);
  data::Trace prediction(static_cast<std::size_t>(spec.horizon),
                         static_cast<std::size_t>(spec.channels));
  prediction.values() = std::move(y);
  prediction.start_time = input.start_time + spec.lookback;
  return prediction;
}

ParamVector grad(const ModelSpec& spec, const ParamVector& params,
                 std::span<const data::Window> batch) {
  spec.validate();
  if (batch.empty()) throw InputError("gradient over an empty batch");
  check_shapes(spec, params, batch.front().input);

  ParamVector g;
  g.tag = params.tag;
  g.values.assign(params.values.size(), 0.0);
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  accumulate_grad(spec, params, batch, idx, g);
  return g;
}

double mse_loss(const ModelSpec& spec, const ParamVector& params,
                std::span<const data::Window> batch) {
  spec.validate();
  if (batch.empty()) throw InputError("loss over an empty batch");
  check_shapes(spec, params, batch.front().input);

  const std::size_t out = static_cast<std::size_t>(spec.horizon) * spec.channels;
  double total = 0.0;
  for (const data::Window& w : batch) {
    auto y = forward_values(spec, params, w.input);
    for (std::size_t o = 0; o < out; ++o) {
      const double r = y[o] - w.target.values()[o];
      total += r * r;
    }
  }
  return total / (static_cast<double>(batch.size()) * static_cast<double>(out));
}

ParamVector local_sgd(const ModelSpec& spec, const ParamVector& start,
                      std::span<const data::Window> windows, const SgdOptions& options,
                      util::Rng& rng) {
  spec.validate();
  if (windows.empty()) throw InputError("local training needs a nonempty dataset");
  if (options.eta < 0) throw ConfigError("learning rate must be nonnegative");
  if (options.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (options.batch_size < 1) throw ConfigError("batch size must be at least 1");
  check_shapes(spec, start, windows.front().input);
  if (options.prox_mu != 0.0 && options.prox_ref == nullptr)
    throw ContractError("proximal term requires a reference vector");

  double clip = options.clip_norm;
  if (clip == 0.0 && spec.arch == Arch::VanillaRnn) clip = 5.0;

  ParamVector params = start;
  ParamVector g;
  g.tag = params.tag;

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
      std::span<const std::size_t> idx(order.data() + begin, end - begin);

      g.values.assign(params.values.size(), 0.0);
      accumulate_grad(spec, params, windows, idx, g);

      if (clip > 0.0) {
        const double norm = g.l2_norm();
        if (norm > clip) g *= clip / norm;
      }
      if (options.task_weight != 1.0) g *= options.task_weight;
      if (options.prox_mu != 0.0) {
        for (std::size_t i = 0; i < g.values.size(); ++i)
          g.values[i] += options.prox_mu * (params.values[i] - options.prox_ref->values[i]);
      }
      params.axpy(-options.eta, g);
    }
  }
  return params;
}

}  // namespace floral::model
