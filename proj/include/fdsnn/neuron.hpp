#pragma once

#include "fdsnn/bootstrap.hpp"
#include "fdsnn/lwe.hpp"

#include <cstdint>
#include <limits>
#include <utility>

namespace fdsnn {

// Leak ratio for the discretized reset: (tau-1)/tau, or the alternative (theta-1)/theta.
enum class LeakMode { TauRatio, ThetaRatio };

struct LifParams {
  double tau = std::numeric_limits<double>::infinity();  // infinity: IF neuron
  double v_th = 1.0;
  double v_reset = 0.0;
  std::int64_t theta = 1;
  std::int64_t v_th_hat = 1;
  std::int64_t leak_num = 1;
  std::int64_t leak_den = 1;

  bool is_if() const { return tau == std::numeric_limits<double>::infinity(); }
  // round(lambda * h), half away from zero.
  std::int64_t leak(std::int64_t h) const;

  // LIF: v_th_hat = round(theta * tau * v_th); IF: v_th_hat = round(theta * v_th), lambda = 1.
  static LifParams make(double tau, std::int64_t theta, double v_th = 1.0, LeakMode mode = LeakMode::TauRatio);
};

struct PlainLifState {
  std::int64_t v_hat = 0;
};

struct PlainStep {
  int spike2 = 0;
  std::int64_t h_hat = 0;
  PlainLifState next;
};

// H = V + I; fire iff H >= v_th_hat; V' = 0 on fire or H <= 0, else round(lambda H).
// With p > 0, H outside [v_th_hat - p/2, p/2) raises OverflowError (the range both bootstraps decode).
PlainStep plain_lif_step(PlainLifState state, std::int64_t i_hat, const LifParams& lif, std::uint64_t p = 0);

ProgramFunction g_fire(std::uint64_t p);
// V_th_hat >= p/2: ParameterError.
ProgramFunction g_reset(const LifParams& lif, std::uint64_t p);

struct NeuronPrograms {
  ProgramFunction fire;
  ProgramFunction reset;

  static NeuronPrograms build(const LifParams& lif, std::uint64_t p);
};

LweCiphertext fhe_fire(const LweCiphertext& h_ct, const LifParams& lif, const BootstrapKey& bk,
                       const NeuronPrograms& prog);
LweCiphertext fhe_reset(const LweCiphertext& h_ct, const BootstrapKey& bk, const NeuronPrograms& prog);

struct CipherLifState {
  LweCiphertext v_ct;
};

// Exactly two bootstraps: (Enc(2S), new state).
std::pair<LweCiphertext, CipherLifState> fhe_lif_step(const CipherLifState& state, const LweCiphertext& i_ct,
                                                      const LifParams& lif, const BootstrapKey& bk,
                                                      const NeuronPrograms& prog);
std::pair<LweCiphertext, CipherLifState> fhe_lif_step(const CipherLifState& state, const LweCiphertext& i_ct,
                                                      const LifParams& lif, const BootstrapKey& bk);

}  // namespace fdsnn
