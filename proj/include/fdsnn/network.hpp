#pragma once

#include "fdsnn/bootstrap.hpp"
#include "fdsnn/lwe.hpp"
#include "fdsnn/neuron.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace fdsnn {

enum class LayerKind { Conv2d, AvgPool, Linear, Spiking };

struct LayerSpec {
  LayerKind kind = LayerKind::Spiking;
  int in_channels = 0, out_channels = 0, kernel = 0, stride = 1, padding = 0;  // conv
  int window = 0;                                                              // pool
  int in_features = 0, out_features = 0;                                       // linear

  bool has_weights() const { return kind == LayerKind::Conv2d || kind == LayerKind::Linear; }
  std::size_t weight_count() const;
};

struct Shape {
  int c = 0, h = 0, w = 0;

  std::size_t size() const { return std::size_t(c) * h * w; }
  bool operator==(const Shape&) const = default;
};

struct CsnnModel {
  std::vector<LayerSpec> arch;
  std::vector<std::vector<double>> weights;  // one row-major array per weight layer
  Shape input_shape{1, 28, 28};
  double tau = std::numeric_limits<double>::infinity();
  double v_th = 1.0;
  double v_reset = 0.0;
  int T = 2;
  int L = 1;

  bool is_if() const { return tau == std::numeric_limits<double>::infinity(); }
  // Output shape after every layer; ParameterError on an inconsistent chain or weight size.
  std::vector<Shape> shapes() const;
  std::size_t spiking_layers() const;
};

// conv 8x8/2 pad 1 (10 maps) -> spiking -> avgpool 2 -> linear 360->160 -> spiking -> linear 160->10 -> spiking.
CsnnModel reference_architecture(double tau = std::numeric_limits<double>::infinity(), int T = 2, int L = 1);

// "fdsnn-model/1" JSON. FormatError on schema violations.
CsnnModel parse_model(const std::string& text);
CsnnModel load_model(const std::string& path);
std::string model_to_json(const CsnnModel& m);
void save_model(const CsnnModel& m, const std::string& path);

// Inputs feeding one output cell; weight_index < 0 denotes a unit weight (pooling).
struct ReceptiveField {
  std::vector<std::uint32_t> inputs;
  std::vector<std::int32_t> weight_index;
};

std::vector<ReceptiveField> receptive_fields(const LayerSpec& spec, const Shape& in);

struct DiscreteLayer {
  LayerSpec spec;
  Shape in_shape, out_shape;
  std::vector<std::int64_t> weights;  // integer weights (weight layers)
  std::vector<double> float_weights;  // source float weights
  double scale = 1.0;                 // s_l: w_hat = Discret(w, s_l)
  std::vector<ReceptiveField> fields;
};

struct DiscretizedNetwork {
  std::vector<DiscreteLayer> layers;
  Shape input_shape;
  LifParams lif;
  std::int64_t theta = 1;
  int L = 1;
  int T = 2;
  std::vector<std::string> warnings;

  std::size_t spiking_layers() const;
  std::size_t output_size() const { return layers.back().out_shape.size(); }
};

// round half away from zero of x * scale.
std::int64_t discret(double x, double scale);

// First weight layer at theta/L, layers fed by spikes at theta/2, pooled sums further divided by n.
// Scales below 1 add a warning.
DiscretizedNetwork discretize(const CsnnModel& model, std::int64_t theta, int L = -1,
                              LeakMode leak = LeakMode::TauRatio);

// Pixels in [0,1] to integer levels Discret(x, L).
std::vector<std::int64_t> quantize_pixels(const std::vector<double>& pixels, int L);

struct CiphertextTensor {
  Shape shape;
  std::vector<LweCiphertext> cells;
};

CiphertextTensor encrypt_image(const std::vector<double>& pixels, const Shape& shape, int L,
                               const SecretKeySet& sk, Rng& rng);

enum class ExecMode { Serial, Parallel };

struct ExecOptions {
  ExecMode mode = ExecMode::Parallel;
  int workers = 1;
  // Called after every spiking layer with the spike ciphertexts: (t, spiking layer ordinal, spikes).
  std::function<void(int, std::size_t, const std::vector<LweCiphertext>&)> on_spikes;
};

CiphertextTensor layer_forward(const CiphertextTensor& x, const DiscreteLayer& layer, const Modulus& q,
                               const ExecOptions& opt = {});

struct SpikingOutput {
  CiphertextTensor spikes;
  std::vector<CipherLifState> states;
};

SpikingOutput spiking_forward(const CiphertextTensor& x, const std::vector<CipherLifState>& states,
                              const LifParams& lif, const BootstrapKey& bk, const NeuronPrograms& prog,
                              const ExecOptions& opt = {});

// Runs T steps on the same encrypted image; returns per-class Enc(sum of 2S).
std::vector<LweCiphertext> infer(const CiphertextTensor& enc_image, const DiscretizedNetwork& net,
                                 const BootstrapKey& bk, int T, const ExecOptions& opt = {});

// Decrypted argmax, ties to the lowest index.
int classify(const std::vector<LweCiphertext>& scores, const SecretKeySet& sk);
int argmax_lowest(const std::vector<std::int64_t>& v);

}  // namespace fdsnn
