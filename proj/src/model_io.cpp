#include "fdsnn/errors.hpp"
#include "fdsnn/network.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace fdsnn {

using nlohmann::json;

namespace {

int get_int(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw FormatError(std::string("model: missing integer field '") + key + "'");
  return j[key].get<int>();
}

double get_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw FormatError(std::string("model: missing number '") + key + "'");
  return j[key].get<double>();
}

LayerSpec parse_layer(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw FormatError("model: every arch entry needs a string 'type'");
  const std::string type = j["type"];
  LayerSpec l;
  if (type == "conv2d") {
    l.kind = LayerKind::Conv2d;
    l.in_channels = get_int(j, "in_channels");
    l.out_channels = get_int(j, "out_channels");
    l.kernel = get_int(j, "kernel");
    l.stride = j.contains("stride") ? get_int(j, "stride") : 1;
    l.padding = j.contains("padding") ? get_int(j, "padding") : 0;
  } else if (type == "avgpool") {
    l.kind = LayerKind::AvgPool;
    l.window = get_int(j, "window");
  } else if (type == "linear") {
    l.kind = LayerKind::Linear;
    l.in_features = get_int(j, "in");
    l.out_features = get_int(j, "out");
  } else if (type == "spiking") {
    l.kind = LayerKind::Spiking;
  } else {
    throw FormatError("model: unknown layer type '" + type + "'");
  }
  return l;
}

json layer_json(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Conv2d:
      return {{"type", "conv2d"}, {"in_channels", l.in_channels}, {"out_channels", l.out_channels},
              {"kernel", l.kernel}, {"stride", l.stride}, {"padding", l.padding}};
    case LayerKind::AvgPool: return {{"type", "avgpool"}, {"window", l.window}};
    case LayerKind::Linear: return {{"type", "linear"}, {"in", l.in_features}, {"out", l.out_features}};
    case LayerKind::Spiking: break;
  }
  return {{"type", "spiking"}};
}

}  // namespace

CsnnModel parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("model: top level must be an object");
  if (j.value("format", "") != "fdsnn-model/1") throw FormatError("model: format must be 'fdsnn-model/1'");

  CsnnModel m;
  if (!j.contains("tau")) throw FormatError("model: missing 'tau'");
  const json& tau = j["tau"];
  if (tau.is_string() && tau.get<std::string>() == "inf") {
    m.tau = std::numeric_limits<double>::infinity();
  } else if (tau.is_number()) {
    m.tau = tau.get<double>();
    if (!(m.tau > 1.0)) throw FormatError("model: tau must be > 1 or \"inf\"");
  } else {
    throw FormatError("model: tau must be a number or \"inf\"");
  }
  m.v_th = get_number(j, "v_th");
  m.v_reset = j.contains("v_reset") ? get_number(j, "v_reset") : 0.0;
  if (m.v_reset != 0.0) throw FormatError("model: only v_reset = 0 is supported");
  m.T = get_int(j, "T");
  m.L = get_int(j, "L");
  if (m.T < 1 || m.L < 1) throw FormatError("model: T and L must be >= 1");

  if (!j.contains("input_shape") || !j["input_shape"].is_array() || j["input_shape"].size() != 3)
    throw FormatError("model: input_shape must be [c, h, w]");
  m.input_shape = {j["input_shape"][0].get<int>(), j["input_shape"][1].get<int>(), j["input_shape"][2].get<int>()};

  if (!j.contains("arch") || !j["arch"].is_array() || j["arch"].empty())
    throw FormatError("model: 'arch' must be a non-empty array");
  for (const json& l : j["arch"]) m.arch.push_back(parse_layer(l));
  if (m.arch.back().kind != LayerKind::Spiking) throw FormatError("model: the last layer must be spiking");

  if (!j.contains("weights") || !j["weights"].is_array()) throw FormatError("model: 'weights' must be an array");
  for (const json& w : j["weights"]) {
    if (!w.is_array()) throw FormatError("model: each weight entry must be a flat array");
    std::vector<double> row;
    row.reserve(w.size());
    for (const json& x : w) {
      if (!x.is_number()) throw FormatError("model: weights must be numbers");
      row.push_back(x.get<double>());
    }
    m.weights.push_back(std::move(row));
  }
  try {
    m.shapes();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  return m;
}

CsnnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string model_to_json(const CsnnModel& m) {
  json j;
  j["format"] = "fdsnn-model/1";
  j["input_shape"] = {m.input_shape.c, m.input_shape.h, m.input_shape.w};
  if (m.is_if())
    j["tau"] = "inf";
  else
    j["tau"] = m.tau;
  j["v_th"] = m.v_th;
  j["v_reset"] = m.v_reset;
  j["T"] = m.T;
  j["L"] = m.L;
  j["arch"] = json::array();
  for (const LayerSpec& l : m.arch) j["arch"].push_back(layer_json(l));
  j["weights"] = m.weights;
  return j.dump();
}

void save_model(const CsnnModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write model file " + path);
  out << model_to_json(m);
}

}  // namespace fdsnn
