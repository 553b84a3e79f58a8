#include "fdsnn/oracle.hpp"

#include "fdsnn/errors.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>

namespace fdsnn {

namespace {

struct FloatLayer {
  LayerSpec spec;
  std::vector<double> weights;
  std::vector<ReceptiveField> fields;
};

struct FloatNet {
  std::vector<FloatLayer> layers;
  Shape input_shape;
  double tau, v_th;
  int T, L;

  explicit FloatNet(const CsnnModel& m) : input_shape(m.input_shape), tau(m.tau), v_th(m.v_th), T(m.T), L(m.L) {
    const auto shapes = m.shapes();
    Shape in = m.input_shape;
    std::size_t wl = 0;
    for (std::size_t i = 0; i < m.arch.size(); ++i) {
      FloatLayer l{m.arch[i], {}, receptive_fields(m.arch[i], in)};
      if (l.spec.has_weights()) l.weights = m.weights[wl++];
      layers.push_back(std::move(l));
      in = shapes[i];
    }
  }

  FloatResult run(const std::vector<double>& pixels) const {
    if (pixels.size() != input_shape.size()) throw ParameterError("image size does not match the model input");
    std::vector<double> x0(pixels.size());
    const auto levels = quantize_pixels(pixels, L);
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = double(levels[i]) / L;

    std::vector<std::vector<double>> v;
    for (const FloatLayer& l : layers)
      if (l.spec.kind == LayerKind::Spiking) v.emplace_back();
    FloatResult r;
    r.max_abs_input.assign(v.size(), 0.0);
    const bool is_if = std::isinf(tau);
    for (int t = 0; t < T; ++t) {
      std::vector<double> x = x0;
      std::size_t sl = 0;
      for (const FloatLayer& l : layers) {
        if (l.spec.kind == LayerKind::Spiking) {
          if (v[sl].empty()) v[sl].assign(x.size(), 0.0);
          for (std::size_t k = 0; k < x.size(); ++k) {
            const double in = x[k];
            r.max_abs_input[sl] = std::max(r.max_abs_input[sl], std::abs(in));
            const double h = is_if ? v[sl][k] + in : v[sl][k] + (in - v[sl][k]) / tau;
            const bool fire = h >= v_th;
            v[sl][k] = (fire || h <= 0) ? 0.0 : h;
            x[k] = fire ? 1.0 : 0.0;
          }
          ++sl;
          continue;
        }
        std::vector<double> y(l.fields.size(), 0.0);
        for (std::size_t c = 0; c < l.fields.size(); ++c) {
          const ReceptiveField& f = l.fields[c];
          double s = 0;
          for (std::size_t j = 0; j < f.inputs.size(); ++j)
            s += (f.weight_index[j] < 0 ? 1.0 : l.weights[f.weight_index[j]]) * x[f.inputs[j]];
          if (l.spec.kind == LayerKind::AvgPool) s /= double(l.spec.window) * l.spec.window;
          y[c] = s;
        }
        x = std::move(y);
      }
      if (r.scores.empty()) r.scores.assign(x.size(), 0.0);
      for (std::size_t k = 0; k < x.size(); ++k) r.scores[k] += x[k];
    }
    r.label = int(std::max_element(r.scores.begin(), r.scores.end()) - r.scores.begin());
    return r;
  }
};

int effective_workers(int w) { return std::max(1, w); }

}  // namespace

FloatResult float_infer(const CsnnModel& model, const std::vector<double>& pixels) {
  return FloatNet(model).run(pixels);
}

PlainResult plain_infer(const DiscretizedNetwork& net, const std::vector<double>& pixels, std::uint64_t p,
                        bool keep_trace) {
  if (pixels.size() != net.input_shape.size()) throw ParameterError("image size does not match the network input");
  const std::vector<std::int64_t> x0 = quantize_pixels(pixels, net.L);
  std::vector<std::vector<PlainLifState>> states;
  for (const DiscreteLayer& l : net.layers)
    if (l.spec.kind == LayerKind::Spiking) states.emplace_back(l.out_shape.size());

  PlainResult r;
  r.max_abs_i.assign(states.size(), 0);
  r.scores.assign(net.output_size(), 0);
  for (int t = 0; t < net.T; ++t) {
    StepTrace st;
    std::vector<std::int64_t> x = x0;
    std::size_t sl = 0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      const DiscreteLayer& l = net.layers[li];
      if (l.spec.kind == LayerKind::Spiking) {
        SpikingTap tap;
        tap.layer = li;
        std::vector<std::int64_t> out(x.size());
        if (keep_trace) {
          tap.i_hat = x;
          tap.h_hat.resize(x.size());
          tap.v_next.resize(x.size());
          tap.spike2.resize(x.size());
        }
        for (std::size_t k = 0; k < x.size(); ++k) {
          r.max_abs_i[sl] = std::max(r.max_abs_i[sl], std::abs(x[k]));
          const PlainStep s = plain_lif_step(states[sl][k], x[k], net.lif, p);
          states[sl][k] = s.next;
          out[k] = s.spike2;
          if (keep_trace) {
            tap.h_hat[k] = s.h_hat;
            tap.v_next[k] = s.next.v_hat;
            tap.spike2[k] = s.spike2;
          }
        }
        if (keep_trace) st.spiking.push_back(std::move(tap));
        x = std::move(out);
        ++sl;
        continue;
      }
      std::vector<std::int64_t> y(l.fields.size(), 0);
      for (std::size_t c = 0; c < l.fields.size(); ++c) {
        const ReceptiveField& f = l.fields[c];
        std::int64_t s = 0;
        for (std::size_t j = 0; j < f.inputs.size(); ++j)
          s += (f.weight_index[j] < 0 ? 1 : l.weights[f.weight_index[j]]) * x[f.inputs[j]];
        y[c] = s;
      }
      if (keep_trace) st.linear.push_back({li, x, y});
      x = std::move(y);
    }
    for (std::size_t k = 0; k < x.size(); ++k) r.scores[k] += x[k];
    if (keep_trace) r.steps.push_back(std::move(st));
  }
  r.label = argmax_lowest(r.scores);
  return r;
}

std::size_t range_violations(const PlainResult& r, const LifParams& lif, std::uint64_t p) {
  const auto half = static_cast<std::int64_t>(p / 2);
  std::size_t bad = 0;
  for (const StepTrace& st : r.steps)
    for (const SpikingTap& tap : st.spiking)
      for (std::int64_t h : tap.h_hat)
        if (h < lif.v_th_hat - half || h >= half) ++bad;
  return bad;
}

WeightNorms scan_weight_l1(const CsnnModel& model) {
  WeightNorms w;
  const auto shapes = model.shapes();
  Shape in = model.input_shape;
  std::size_t wl = 0;
  for (std::size_t i = 0; i < model.arch.size(); ++i) {
    const LayerSpec& l = model.arch[i];
    if (l.has_weights()) {
      const auto& ws = model.weights[wl++];
      double l1 = 0, l2 = 0;
      for (const ReceptiveField& f : receptive_fields(l, in)) {
        double a = 0, b = 0;
        for (std::int32_t k : f.weight_index) {
          a += std::abs(ws[k]);
          b += ws[k] * ws[k];
        }
        l1 = std::max(l1, a);
        l2 = std::max(l2, b);
      }
      w.l1.push_back(l1);
      w.l2.push_back(std::sqrt(l2));
    }
    in = shapes[i];
  }
  return w;
}

WeightNorms scan_weight_l1(const DiscretizedNetwork& net) {
  WeightNorms w;
  for (const DiscreteLayer& l : net.layers) {
    if (!l.spec.has_weights()) continue;
    double l1 = 0, l2 = 0;
    for (const ReceptiveField& f : l.fields) {
      double a = 0, b = 0;
      for (std::int32_t k : f.weight_index) {
        const double x = double(l.weights[k]);
        a += std::abs(x);
        b += x * x;
      }
      l1 = std::max(l1, a);
      l2 = std::max(l2, b);
    }
    w.l1.push_back(l1);
    w.l2.push_back(std::sqrt(l2));
  }
  return w;
}

LayerStats scan_layer_max(const CsnnModel& model, const Dataset& data, int workers) {
  const FloatNet fn(model);
  const std::size_t layers = model.spiking_layers();
  std::vector<double> mx(layers, 0.0);
  const long long n = static_cast<long long>(data.size());
#pragma omp parallel num_threads(effective_workers(workers))
  {
    std::vector<double> local(layers, 0.0);
#pragma omp for schedule(dynamic, 4) nowait
    for (long long i = 0; i < n; ++i) {
      const FloatResult r = fn.run(data.images[i]);
      for (std::size_t k = 0; k < layers; ++k) local[k] = std::max(local[k], r.max_abs_input[k]);
    }
#pragma omp critical
    for (std::size_t k = 0; k < layers; ++k) mx[k] = std::max(mx[k], local[k]);
  }
  LayerStats s;
  s.samples = data.size();
  s.v_th = model.v_th;
  s.tau_eff = model.is_if() ? 1.0 : model.tau;
  s.max_abs_input = mx;
  for (double m : mx) s.layer_max.push_back(s.tau_eff * s.v_th + m);
  s.weight_l1 = scan_weight_l1(model).l1;
  return s;
}

void scan_layer_max(const DiscretizedNetwork& net, const Dataset& data, LayerStats& stats, int workers) {
  const std::size_t layers = net.spiking_layers();
  std::vector<std::int64_t> mx(layers, 0);
  const long long n = static_cast<long long>(data.size());
#pragma omp parallel num_threads(effective_workers(workers))
  {
    std::vector<std::int64_t> local(layers, 0);
#pragma omp for schedule(dynamic, 4) nowait
    for (long long i = 0; i < n; ++i) {
      const PlainResult r = plain_infer(net, data.images[i]);
      for (std::size_t k = 0; k < layers; ++k) local[k] = std::max(local[k], r.max_abs_i[k]);
    }
#pragma omp critical
    for (std::size_t k = 0; k < layers; ++k) mx[k] = std::max(mx[k], local[k]);
  }
  const WeightNorms w = scan_weight_l1(net);
  stats.theta = net.theta;
  stats.max_abs_i_hat = mx;
  stats.weight_l1_hat = w.l1;
  stats.weight_l2_hat = w.l2;
}

std::string LayerStats::to_json() const {
  nlohmann::json j;
  j["format"] = "fdsnn-stats/1";
  j["source"] = source;
  j["samples"] = samples;
  j["v_th"] = v_th;
  j["tau_eff"] = tau_eff;
  j["max_abs_input"] = max_abs_input;
  j["layer_max"] = layer_max;
  j["weight_l1"] = weight_l1;
  if (theta > 0) {
    j["theta"] = theta;
    j["max_abs_i_hat"] = max_abs_i_hat;
    j["weight_l1_hat"] = weight_l1_hat;
    j["weight_l2_hat"] = weight_l2_hat;
  }
  return j.dump(2);
}

LayerStats LayerStats::from_json(const std::string& text) {
  LayerStats s;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "fdsnn-stats/1") throw FormatError("stats: format must be 'fdsnn-stats/1'");
    s.source = j.value("source", "");
    s.samples = j.at("samples").get<std::size_t>();
    s.v_th = j.at("v_th").get<double>();
    s.tau_eff = j.at("tau_eff").get<double>();
    s.max_abs_input = j.at("max_abs_input").get<std::vector<double>>();
    s.layer_max = j.at("layer_max").get<std::vector<double>>();
    s.weight_l1 = j.at("weight_l1").get<std::vector<double>>();
    if (j.contains("theta")) {
      s.theta = j["theta"].get<std::int64_t>();
      s.max_abs_i_hat = j.at("max_abs_i_hat").get<std::vector<std::int64_t>>();
      s.weight_l1_hat = j.at("weight_l1_hat").get<std::vector<double>>();
      s.weight_l2_hat = j.at("weight_l2_hat").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("stats: ") + e.what());
  }
  return s;
}

std::vector<std::vector<std::uint8_t>> poisson_encode(const std::vector<double>& pixels, int T, Rng& rng) {
  if (T < 0) throw ParameterError("T must be >= 0");
  std::vector<std::uint8_t> v(pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<std::uint8_t>(std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0));
  std::vector<std::vector<std::uint8_t>> frames(T, std::vector<std::uint8_t>(v.size()));
  for (int t = 0; t < T; ++t)
    for (std::size_t i = 0; i < v.size(); ++i) frames[t][i] = v[i] > rng.uniform_int(0, 255) ? 1 : 0;
  return frames;
}

namespace {

std::uint64_t count_from(const std::vector<LayerSpec>& arch, const std::vector<Shape>& shapes, const Shape& input,
                         int T, CountMode mode) {
  if (T < 0) throw ParameterError("T must be >= 0");
  std::uint64_t per_step = 0;
  for (std::size_t i = 0; i < arch.size(); ++i)
    if (arch[i].kind == LayerKind::Spiking) per_step += 2 * shapes[i].size();
  if (mode == CountMode::PoissonSnn) per_step += input.size();
  return per_step * static_cast<std::uint64_t>(T);
}

}  // namespace

std::uint64_t bootstrap_count(const CsnnModel& model, int T, CountMode mode) {
  if (model.arch.empty()) return 0;
  return count_from(model.arch, model.shapes(), model.input_shape, T, mode);
}

std::uint64_t bootstrap_count(const DiscretizedNetwork& net, int T, CountMode mode) {
  if (net.layers.empty()) return 0;
  std::vector<LayerSpec> arch;
  std::vector<Shape> shapes;
  for (const DiscreteLayer& l : net.layers) {
    arch.push_back(l.spec);
    shapes.push_back(l.out_shape);
  }
  return count_from(arch, shapes, net.input_shape, T, mode);
}

CsnnModel poisson_snn_architecture(int T) {
  CsnnModel m;
  m.T = T;
  LayerSpec fc1{LayerKind::Linear};
  fc1.in_features = 784;
  fc1.out_features = 160;
  LayerSpec fc2{LayerKind::Linear};
  fc2.in_features = 160;
  fc2.out_features = 10;
  LayerSpec spk{LayerKind::Spiking};
  m.arch = {fc1, spk, fc2, spk};
  m.weights = {std::vector<double>(fc1.weight_count()), std::vector<double>(fc2.weight_count())};
  return m;
}

namespace {

template <typename Classify>
AccuracyReport eval_with(const Dataset& data, int workers, Classify&& cls) {
  AccuracyReport rep;
  rep.total = data.size();
  rep.predictions.assign(data.size(), -1);
  const long long n = static_cast<long long>(data.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(effective_workers(workers))
  for (long long i = 0; i < n; ++i) rep.predictions[i] = cls(data.images[i]);
  for (std::size_t i = 0; i < data.size(); ++i) rep.correct += rep.predictions[i] == data.labels[i];
  return rep;
}

}  // namespace

AccuracyReport accuracy_eval(const CsnnModel& model, const Dataset& data, int workers) {
  const FloatNet fn(model);
  return eval_with(data, workers, [&](const std::vector<double>& img) { return fn.run(img).label; });
}

AccuracyReport accuracy_eval(const DiscretizedNetwork& net, const Dataset& data, int workers) {
  return eval_with(data, workers, [&](const std::vector<double>& img) { return plain_infer(net, img).label; });
}

SafetyReport check_configuration(const FheParams& params, const DiscretizedNetwork& net,
                                 const std::vector<double>& layer_max, double boot_noise, double safety,
                                 double margin_required) {
  SafetyReport r;
  const double theta = static_cast<double>(net.theta);
  try {
    r.required_p = select_p(theta, layer_max, safety, 2 * params.N);
  } catch (const ConfigurationError& e) {
    r.reasons.push_back(e.what());
  }
  r.p_ok = r.required_p != 0 && params.p >= r.required_p;
  if (r.required_p != 0 && !r.p_ok)
    r.reasons.push_back("message modulus p=" + std::to_string(params.p) + " is below the required " +
                        std::to_string(r.required_p));
  r.threshold_ok = net.lif.v_th_hat < static_cast<std::int64_t>(params.p / 2);
  if (!r.threshold_ok) r.reasons.push_back("V_th_hat does not fit below p/2");
  const WeightNorms w = scan_weight_l1(net);
  for (double x : w.l1) r.weight_l1 = std::max(r.weight_l1, x / theta);
  for (double x : w.l2) r.weight_l2 = std::max(r.weight_l2, x / theta);
  r.budget = noise_budget_check(params, theta, r.weight_l1, boot_noise, r.weight_l2, margin_required);
  if (!r.budget.noise_ok) r.reasons.push_back("weight-sum noise bound exceeds q/(2p) with the required margin");
  if (!r.budget.switch_ok) r.reasons.push_back("modulus switch q -> 2N is too coarse for p");
  r.pass = r.p_ok && r.threshold_ok && r.budget.pass;
  return r;
}

std::string SafetyReport::to_json() const {
  nlohmann::json j = {{"required_p", required_p},     {"p_ok", p_ok},
                      {"threshold_ok", threshold_ok}, {"weight_l1_effective", weight_l1},
                      {"weight_l2_effective", weight_l2}, {"budget", nlohmann::json::parse(budget.to_json())},
                      {"pass", pass},                 {"reasons", reasons}};
  return j.dump(2);
}

}  // namespace fdsnn
