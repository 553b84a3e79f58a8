#pragma once

#include "fdsnn/dataset.hpp"
#include "fdsnn/network.hpp"
#include "fdsnn/params.hpp"
#include "fdsnn/random.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fdsnn {

struct FloatResult {
  std::vector<double> scores;         // spike counts over T
  int label = 0;                      // argmax, lowest index on ties
  std::vector<double> max_abs_input;  // max_t max_cell |I| per spiking layer
};

// Float CSNN with the literal update H = V + (I - V)/tau (IF: H = V + I), fire at H >= v_th,
// reset to 0 on fire or H <= 0. Pixels are quantized to the model's L levels first.
FloatResult float_infer(const CsnnModel& model, const std::vector<double>& pixels);

// Layer taps recorded by plain_infer for one timestep.
struct LinearTap {
  std::size_t layer = 0;  // index into DiscretizedNetwork::layers
  std::vector<std::int64_t> input, output;
};

struct SpikingTap {
  std::size_t layer = 0;
  std::vector<std::int64_t> i_hat, h_hat, v_next;
  std::vector<int> spike2;
};

struct StepTrace {
  std::vector<LinearTap> linear;
  std::vector<SpikingTap> spiking;
};

struct PlainResult {
  std::vector<std::int64_t> scores;    // sum over T of spike2 in the last spiking layer
  int label = 0;
  std::vector<std::int64_t> max_abs_i;  // per spiking layer
  std::vector<StepTrace> steps;         // empty unless a trace was requested
};

// Exact integer DiCSNN. With p > 0 every H outside [V_th_hat - p/2, p/2) raises OverflowError.
PlainResult plain_infer(const DiscretizedNetwork& net, const std::vector<double>& pixels, std::uint64_t p = 0,
                        bool keep_trace = false);

// Count of traced H values outside [V_th_hat - p/2, p/2).
std::size_t range_violations(const PlainResult& r, const LifParams& lif, std::uint64_t p);

struct LayerStats {
  std::string source;
  std::size_t samples = 0;
  double v_th = 1.0;
  double tau_eff = 1.0;                  // tau for LIF, 1 for IF
  std::vector<double> max_abs_input;     // per spiking layer, float units
  std::vector<double> layer_max;         // per spiking layer: tau_eff * V_th + max|I|
  std::vector<double> weight_l1;         // per weight layer: max_cell sum |w|
  // Present when a discretization was scanned.
  std::int64_t theta = 0;
  std::vector<std::int64_t> max_abs_i_hat;  // per spiking layer
  std::vector<double> weight_l1_hat;        // per weight layer: max_cell sum |w_hat|
  std::vector<double> weight_l2_hat;        // per weight layer: max_cell sqrt(sum w_hat^2)

  std::string to_json() const;
  static LayerStats from_json(const std::string& text);
};

// Float-model maxima over a dataset (per-sample parallel).
LayerStats scan_layer_max(const CsnnModel& model, const Dataset& data, int workers = 1);
// Adds the integer maxima for a discretization to stats.
void scan_layer_max(const DiscretizedNetwork& net, const Dataset& data, LayerStats& stats, int workers = 1);

struct WeightNorms {
  std::vector<double> l1;  // per weight layer, max over output cells
  std::vector<double> l2;  // sqrt of max sum of squares
};

WeightNorms scan_weight_l1(const CsnnModel& model);
WeightNorms scan_weight_l1(const DiscretizedNetwork& net);

// T frames of 0/1 spikes: pixel v = round(255 x) spikes iff v > M, M uniform on {0..255}.
std::vector<std::vector<std::uint8_t>> poisson_encode(const std::vector<double>& pixels, int T, Rng& rng);

enum class CountMode { Csnn, PoissonSnn };

// Two bootstraps per spiking neuron per step; Poisson mode adds one sign bootstrap per input pixel.
std::uint64_t bootstrap_count(const CsnnModel& model, int T, CountMode mode = CountMode::Csnn);
std::uint64_t bootstrap_count(const DiscretizedNetwork& net, int T, CountMode mode = CountMode::Csnn);

// linear 784->160 -> spiking -> linear 160->10 -> spiking, fed by Poisson frames.
CsnnModel poisson_snn_architecture(int T = 1);

struct AccuracyReport {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<int> predictions;

  double accuracy() const { return total ? double(correct) / total : 0.0; }
};

AccuracyReport accuracy_eval(const CsnnModel& model, const Dataset& data, int workers = 1);
AccuracyReport accuracy_eval(const DiscretizedNetwork& net, const Dataset& data, int workers = 1);

// Whether a discretized network can run under params: p from select_p on the layer maxima,
// V_th_hat < p/2, and the noise budget with the effective per-layer amplification max_l sum|w_hat| / theta.
struct SafetyReport {
  std::uint64_t required_p = 0;
  bool p_ok = false;
  bool threshold_ok = false;
  double weight_l1 = 0;  // effective, divided by theta
  double weight_l2 = 0;
  BudgetReport budget;
  bool pass = false;
  std::vector<std::string> reasons;

  std::string to_json() const;
};

SafetyReport check_configuration(const FheParams& params, const DiscretizedNetwork& net,
                                 const std::vector<double>& layer_max, double boot_noise, double safety = 1.0,
                                 double margin_required = 2.0);

}  // namespace fdsnn
