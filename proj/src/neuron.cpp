#include "fdsnn/neuron.hpp"

#include "fdsnn/errors.hpp"

#include <cmath>
#include <string>

namespace fdsnn {

std::int64_t LifParams::leak(std::int64_t h) const { return div_round(h * leak_num, leak_den); }

LifParams LifParams::make(double tau, std::int64_t theta, double v_th, LeakMode mode) {
  if (theta < 1) throw ParameterError("theta must be >= 1");
  LifParams l;
  l.tau = tau;
  l.v_th = v_th;
  l.theta = theta;
  if (l.is_if()) {
    l.v_th_hat = std::llround(static_cast<double>(theta) * v_th);
    l.leak_num = l.leak_den = 1;
    return l;
  }
  if (!(tau >= 2) || tau != std::floor(tau)) throw ParameterError("tau must be an integer >= 2 or infinity");
  const auto t = static_cast<std::int64_t>(tau);
  l.v_th_hat = std::llround(static_cast<double>(theta) * tau * v_th);
  if (mode == LeakMode::TauRatio) {
    l.leak_num = t - 1;
    l.leak_den = t;
  } else {
    l.leak_num = theta - 1;
    l.leak_den = theta;
  }
  return l;
}

PlainStep plain_lif_step(PlainLifState state, std::int64_t i_hat, const LifParams& lif, std::uint64_t p) {
  PlainStep r;
  r.h_hat = state.v_hat + i_hat;
  if (p > 0) {
    const auto half = static_cast<std::int64_t>(p / 2);
    if (r.h_hat >= half || r.h_hat < lif.v_th_hat - half)
      throw OverflowError("membrane value " + std::to_string(r.h_hat) + " leaves [V_th_hat - p/2, p/2) for p=" +
                          std::to_string(p));
  }
  const bool fire = r.h_hat >= lif.v_th_hat;
  r.spike2 = fire ? 2 : 0;
  r.next.v_hat = (fire || r.h_hat <= 0) ? 0 : lif.leak(r.h_hat);
  return r;
}

ProgramFunction g_fire(std::uint64_t p) {
  return ProgramFunction::make(p, [](std::int64_t) -> std::int64_t { return 1; });
}

ProgramFunction g_reset(const LifParams& lif, std::uint64_t p) {
  if (lif.v_th_hat >= static_cast<std::int64_t>(p / 2))
    throw ParameterError("reset program needs V_th_hat < p/2 (V_th_hat=" + std::to_string(lif.v_th_hat) +
                         ", p=" + std::to_string(p) + ")");
  return ProgramFunction::make(p, [&lif](std::int64_t m) -> std::int64_t {
    return m >= lif.v_th_hat ? 0 : lif.leak(m);
  });
}

NeuronPrograms NeuronPrograms::build(const LifParams& lif, std::uint64_t p) {
  return {g_fire(p), g_reset(lif, p)};
}

LweCiphertext fhe_fire(const LweCiphertext& h_ct, const LifParams& lif, const BootstrapKey& bk,
                       const NeuronPrograms& prog) {
  const FheParams& params = bk.params();
  const LweCiphertext shifted = add_plain(h_ct, -lif.v_th_hat, params);
  return add_plain(bootstrap(prog.fire, shifted, bk), 1, params);
}

LweCiphertext fhe_reset(const LweCiphertext& h_ct, const BootstrapKey& bk, const NeuronPrograms& prog) {
  return bootstrap(prog.reset, h_ct, bk);
}

std::pair<LweCiphertext, CipherLifState> fhe_lif_step(const CipherLifState& state, const LweCiphertext& i_ct,
                                                      const LifParams& lif, const BootstrapKey& bk,
                                                      const NeuronPrograms& prog) {
  const LweCiphertext h = lwe_add(state.v_ct, i_ct, bk.params().modulus());
  LweCiphertext spike = fhe_fire(h, lif, bk, prog);
  CipherLifState next{fhe_reset(h, bk, prog)};
  return {std::move(spike), std::move(next)};
}

std::pair<LweCiphertext, CipherLifState> fhe_lif_step(const CipherLifState& state, const LweCiphertext& i_ct,
                                                      const LifParams& lif, const BootstrapKey& bk) {
  return fhe_lif_step(state, i_ct, lif, bk, NeuronPrograms::build(lif, bk.params().p));
}

}  // namespace fdsnn
