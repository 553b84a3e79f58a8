#include "fdsnn/network.hpp"

#include "fdsnn/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fdsnn {

std::size_t LayerSpec::weight_count() const {
  switch (kind) {
    case LayerKind::Conv2d: return std::size_t(out_channels) * in_channels * kernel * kernel;
    case LayerKind::Linear: return std::size_t(out_features) * in_features;
    default: return 0;
  }
}

std::vector<Shape> CsnnModel::shapes() const {
  std::vector<Shape> out;
  Shape s = input_shape;
  std::size_t wl = 0;
  for (const LayerSpec& l : arch) {
    switch (l.kind) {
      case LayerKind::Conv2d: {
        if (l.in_channels != s.c) throw ParameterError("conv input channels do not match the incoming shape");
        if (l.kernel <= 0 || l.stride <= 0 || l.padding < 0) throw ParameterError("bad conv geometry");
        const int h = (s.h + 2 * l.padding - l.kernel) / l.stride + 1;
        const int w = (s.w + 2 * l.padding - l.kernel) / l.stride + 1;
        if (h <= 0 || w <= 0) throw ParameterError("conv kernel larger than padded input");
        s = {l.out_channels, h, w};
        break;
      }
      case LayerKind::AvgPool:
        if (l.window <= 0 || s.h % l.window || s.w % l.window)
          throw ParameterError("pool window must divide the spatial size");
        s = {s.c, s.h / l.window, s.w / l.window};
        break;
      case LayerKind::Linear:
        if (std::size_t(l.in_features) != s.size())
          throw ParameterError("linear input size " + std::to_string(l.in_features) + " does not match " +
                               std::to_string(s.size()));
        s = {l.out_features, 1, 1};
        break;
      case LayerKind::Spiking: break;
    }
    if (l.has_weights()) {
      if (wl >= weights.size()) throw ParameterError("missing weights for a weight layer");
      if (weights[wl].size() != l.weight_count())
        throw ParameterError("weight layer " + std::to_string(wl) + " has " + std::to_string(weights[wl].size()) +
                             " weights, expected " + std::to_string(l.weight_count()));
      ++wl;
    }
    out.push_back(s);
  }
  if (wl != weights.size()) throw ParameterError("more weight arrays than weight layers");
  return out;
}

std::size_t CsnnModel::spiking_layers() const {
  return std::count_if(arch.begin(), arch.end(), [](const LayerSpec& l) { return l.kind == LayerKind::Spiking; });
}

CsnnModel reference_architecture(double tau, int T, int L) {
  CsnnModel m;
  m.tau = tau;
  m.T = T;
  m.L = L;
  LayerSpec conv{LayerKind::Conv2d, 1, 10, 8, 2, 1};
  LayerSpec spk{LayerKind::Spiking};
  LayerSpec pool{LayerKind::AvgPool};
  pool.window = 2;
  LayerSpec fc1{LayerKind::Linear};
  fc1.in_features = 360;
  fc1.out_features = 160;
  LayerSpec fc2{LayerKind::Linear};
  fc2.in_features = 160;
  fc2.out_features = 10;
  m.arch = {conv, spk, pool, fc1, spk, fc2, spk};
  m.weights = {std::vector<double>(conv.weight_count()), std::vector<double>(fc1.weight_count()),
               std::vector<double>(fc2.weight_count())};
  return m;
}

std::vector<ReceptiveField> receptive_fields(const LayerSpec& l, const Shape& in) {
  std::vector<ReceptiveField> f;
  switch (l.kind) {
    case LayerKind::Conv2d: {
      const int oh = (in.h + 2 * l.padding - l.kernel) / l.stride + 1;
      const int ow = (in.w + 2 * l.padding - l.kernel) / l.stride + 1;
      f.resize(std::size_t(l.out_channels) * oh * ow);
      for (int o = 0; o < l.out_channels; ++o)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) {
            ReceptiveField& r = f[(std::size_t(o) * oh + y) * ow + x];
            for (int c = 0; c < l.in_channels; ++c)
              for (int ky = 0; ky < l.kernel; ++ky)
                for (int kx = 0; kx < l.kernel; ++kx) {
                  const int iy = y * l.stride - l.padding + ky;
                  const int ix = x * l.stride - l.padding + kx;
                  if (iy < 0 || ix < 0 || iy >= in.h || ix >= in.w) continue;  // zero padding
                  r.inputs.push_back(static_cast<std::uint32_t>((c * in.h + iy) * in.w + ix));
                  r.weight_index.push_back(((o * l.in_channels + c) * l.kernel + ky) * l.kernel + kx);
                }
          }
      break;
    }
    case LayerKind::AvgPool: {
      const int oh = in.h / l.window, ow = in.w / l.window;
      f.resize(std::size_t(in.c) * oh * ow);
      for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) {
            ReceptiveField& r = f[(std::size_t(c) * oh + y) * ow + x];
            for (int dy = 0; dy < l.window; ++dy)
              for (int dx = 0; dx < l.window; ++dx) {
                r.inputs.push_back(static_cast<std::uint32_t>((c * in.h + y * l.window + dy) * in.w + x * l.window + dx));
                r.weight_index.push_back(-1);
              }
          }
      break;
    }
    case LayerKind::Linear: {
      f.resize(l.out_features);
      for (int o = 0; o < l.out_features; ++o) {
        f[o].inputs.resize(l.in_features);
        f[o].weight_index.resize(l.in_features);
        for (int i = 0; i < l.in_features; ++i) {
          f[o].inputs[i] = static_cast<std::uint32_t>(i);
          f[o].weight_index[i] = o * l.in_features + i;
        }
      }
      break;
    }
    case LayerKind::Spiking: break;
  }
  return f;
}

std::size_t DiscretizedNetwork::spiking_layers() const {
  return std::count_if(layers.begin(), layers.end(),
                       [](const DiscreteLayer& l) { return l.spec.kind == LayerKind::Spiking; });
}

std::int64_t discret(double x, double scale) {
  const double v = x * scale;
  return static_cast<std::int64_t>(v >= 0 ? std::floor(v + 0.5) : -std::floor(-v + 0.5));
}

DiscretizedNetwork discretize(const CsnnModel& model, std::int64_t theta, int L, LeakMode leak) {
  if (theta < 1) throw ParameterError("theta must be >= 1");
  if (L < 0) L = model.L;
  if (L < 1) throw ParameterError("pixel levels L must be >= 1");
  const std::vector<Shape> shapes = model.shapes();
  DiscretizedNetwork net;
  net.input_shape = model.input_shape;
  net.lif = LifParams::make(model.tau, theta, model.v_th, leak);
  net.theta = theta;
  net.L = L;
  net.T = model.T;

  // Multiplier carried by the integer activations relative to the float network.
  double carried = L;
  Shape in = model.input_shape;
  std::size_t wl = 0;
  for (std::size_t i = 0; i < model.arch.size(); ++i) {
    DiscreteLayer d;
    d.spec = model.arch[i];
    d.in_shape = in;
    d.out_shape = shapes[i];
    d.fields = receptive_fields(d.spec, in);
    switch (d.spec.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Linear: {
        d.scale = static_cast<double>(theta) / carried;
        if (d.scale < 1.0) {
          std::ostringstream os;
          os << "weight layer " << wl << " discretized at scale " << d.scale << " < 1: precision collapse";
          net.warnings.push_back(os.str());
        }
        d.float_weights = model.weights[wl++];
        d.weights.resize(d.float_weights.size());
        for (std::size_t k = 0; k < d.weights.size(); ++k) d.weights[k] = discret(d.float_weights[k], d.scale);
        carried = static_cast<double>(theta);
        break;
      }
      case LayerKind::AvgPool: carried *= static_cast<double>(d.spec.window) * d.spec.window; break;
      case LayerKind::Spiking: carried = 2.0; break;
    }
    net.layers.push_back(std::move(d));
    in = shapes[i];
  }
  return net;
}

std::vector<std::int64_t> quantize_pixels(const std::vector<double>& pixels, int L) {
  std::vector<std::int64_t> q(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double x = std::clamp(pixels[i], 0.0, 1.0);
    q[i] = discret(x, L);
  }
  return q;
}

CiphertextTensor encrypt_image(const std::vector<double>& pixels, const Shape& shape, int L,
                               const SecretKeySet& sk, Rng& rng) {
  if (pixels.size() != shape.size()) throw ParameterError("image size does not match the input shape");
  const auto levels = quantize_pixels(pixels, L);
  CiphertextTensor t;
  t.shape = shape;
  t.cells.reserve(levels.size());
  for (std::int64_t v : levels) t.cells.push_back(lwe_encrypt(v, sk.lwe, sk.params, rng));
  return t;
}

namespace {

int worker_count(const ExecOptions& opt) { return std::max(1, opt.workers); }

LweCiphertext field_sum(const CiphertextTensor& x, const DiscreteLayer& layer, std::size_t cell,
                        const Modulus& q) {
  const ReceptiveField& f = layer.fields[cell];
  std::vector<const LweCiphertext*> cts(f.inputs.size());
  std::vector<std::int64_t> w(f.inputs.size());
  for (std::size_t j = 0; j < f.inputs.size(); ++j) {
    cts[j] = &x.cells[f.inputs[j]];
    w[j] = f.weight_index[j] < 0 ? 1 : layer.weights[f.weight_index[j]];
  }
  if (cts.empty()) return LweCiphertext(x.cells.empty() ? 0 : x.cells[0].dim());
  return weight_sum(std::span<const LweCiphertext* const>(cts), w, q);
}

}  // namespace

CiphertextTensor layer_forward(const CiphertextTensor& x, const DiscreteLayer& layer, const Modulus& q,
                               const ExecOptions& opt) {
  if (!layer.spec.has_weights() && layer.spec.kind != LayerKind::AvgPool)
    throw ParameterError("layer_forward expects a conv, pool or linear layer");
  if (x.shape.size() != layer.in_shape.size() || x.cells.size() != x.shape.size())
    throw ParameterError("layer_forward: input tensor shape mismatch");
  CiphertextTensor y;
  y.shape = layer.out_shape;
  const std::size_t cells = layer.fields.size();
  y.cells.resize(cells);
  if (opt.mode == ExecMode::Serial) {
    for (std::size_t i = 0; i < cells; ++i) y.cells[i] = field_sum(x, layer, i, q);
  } else {
    const long long count = static_cast<long long>(cells);
#pragma omp parallel for schedule(static) num_threads(worker_count(opt))
    for (long long i = 0; i < count; ++i) y.cells[i] = field_sum(x, layer, static_cast<std::size_t>(i), q);
  }
  return y;
}

SpikingOutput spiking_forward(const CiphertextTensor& x, const std::vector<CipherLifState>& states,
                              const LifParams& lif, const BootstrapKey& bk, const NeuronPrograms& prog,
                              const ExecOptions& opt) {
  if (states.size() != x.cells.size()) throw ParameterError("spiking_forward: state/input size mismatch");
  SpikingOutput out;
  out.spikes.shape = x.shape;
  out.spikes.cells.resize(x.cells.size());
  out.states.resize(x.cells.size());
  auto step = [&](std::size_t i) {
    auto [s, v] = fhe_lif_step(states[i], x.cells[i], lif, bk, prog);
    out.spikes.cells[i] = std::move(s);
    out.states[i] = std::move(v);
  };
  if (opt.mode == ExecMode::Serial) {
    for (std::size_t i = 0; i < x.cells.size(); ++i) step(i);
  } else {
    const long long count = static_cast<long long>(x.cells.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(worker_count(opt))
    for (long long i = 0; i < count; ++i) step(static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<LweCiphertext> infer(const CiphertextTensor& enc_image, const DiscretizedNetwork& net,
                                 const BootstrapKey& bk, int T, const ExecOptions& opt) {
  if (T < 1) throw ParameterError("T must be >= 1");
  if (enc_image.shape.size() != net.input_shape.size()) throw ParameterError("encrypted image shape mismatch");
  const FheParams& params = bk.params();
  const Modulus q = params.modulus();
  const NeuronPrograms prog = NeuronPrograms::build(net.lif, params.p);

  std::vector<std::vector<CipherLifState>> states;
  for (const DiscreteLayer& l : net.layers)
    if (l.spec.kind == LayerKind::Spiking)
      states.emplace_back(l.out_shape.size(), CipherLifState{lwe_trivial(0, params.n, params)});

  std::vector<LweCiphertext> scores(net.output_size(), lwe_trivial(0, params.n, params));
  for (int t = 0; t < T; ++t) {
    CiphertextTensor cur = enc_image;
    std::size_t sl = 0;
    for (const DiscreteLayer& l : net.layers) {
      if (l.spec.kind == LayerKind::Spiking) {
        SpikingOutput o = spiking_forward(cur, states[sl], net.lif, bk, prog, opt);
        states[sl] = std::move(o.states);
        cur = std::move(o.spikes);
        if (opt.on_spikes) opt.on_spikes(t, sl, cur.cells);
        ++sl;
      } else {
        cur = layer_forward(cur, l, q, opt);
      }
    }
    for (std::size_t k = 0; k < scores.size(); ++k) lwe_add_inplace(scores[k], cur.cells[k], q);
  }
  return scores;
}

int argmax_lowest(const std::vector<std::int64_t>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

int classify(const std::vector<LweCiphertext>& scores, const SecretKeySet& sk) {
  std::vector<std::int64_t> v(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) v[i] = lwe_decrypt(scores[i], sk.lwe, sk.params);
  return argmax_lowest(v);
}

}  // namespace fdsnn
