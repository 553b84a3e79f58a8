#pragma once

#include "fdsnn/ring.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fdsnn {

struct GadgetParams {
  unsigned base_log = 4;
  unsigned levels = 3;

  std::uint64_t base() const { return std::uint64_t(1) << base_log; }
  bool operator==(const GadgetParams&) const = default;
};

struct FheParams {
  std::string preset_name = "custom";
  std::size_t n = 32;          // LWE dimension
  std::uint64_t q = 4096;      // ciphertext modulus (LWE and RLWE)
  std::size_t N = 512;         // ring degree
  std::uint64_t p = 8;         // message modulus
  double sigma = 4.0;          // fresh LWE encryption noise (std, q units)
  double sigma_bk = 0.0;       // RGSW bootstrapping-key noise
  double sigma_ks = 0.0;       // key-switching-key noise
  GadgetParams gadget{4, 3};
  GadgetParams ks{4, 3};

  Modulus modulus() const { return Modulus(q); }
  unsigned log_q() const;
  std::uint64_t delta() const { return q / p; }
  // Throws ParameterError when an invariant fails.
  void validate() const;
  // Stable 16-hex-digit fingerprint of every field.
  std::string digest() const;
  std::string to_json() const;
  static FheParams from_json(std::string_view text);
  FheParams with_p(std::uint64_t p_new) const;

  bool operator==(const FheParams&) const = default;
};

// TOY: exhaustive-sweep test preset. DESK: desk-scale functional preset for the fixture
// network. LARGE: security-shaped nominal preset. TOY and DESK use noiseless key material.
FheParams preset(std::string_view name);
std::vector<std::string> preset_names();

constexpr std::uint64_t kMinMessageModulus = 4;

// Smallest power-of-two p with p/2 >= ceil(theta * max(layer_max) * safety).
// Throws ConfigurationError when p would exceed max_two_n.
std::uint64_t select_p(double theta, std::span<const double> layer_max, double safety = 1.0,
                       std::uint64_t max_two_n = 4096);

struct BudgetReport {
  double limit = 0;          // q / (2p)
  double l1_bound = 0;       // boot_noise * theta * weight_l1
  double l2_bound = 0;       // boot_noise * theta * weight_l2
  double margin = 0;         // limit / l1_bound (infinite when the bound is 0)
  double margin_required = 2;
  double ms_sigma_slots = 0;  // modulus-switch phase error std, in message units
  double ms_slip_prob = 0;    // per-bootstrap probability the switch error exceeds half a slot
  double ms_slip_limit = 1e-3;
  bool noise_ok = false;
  bool switch_ok = false;
  bool pass = false;

  std::string to_json() const;
};

// Pass iff boot_noise * theta * weight_l1 * margin_required < q/(2p) and the modulus
// switch q -> 2N slips a message by one slot with probability <= ms_slip_limit.
BudgetReport noise_budget_check(const FheParams& params, double theta, double weight_l1,
                                double boot_noise, double weight_l2 = 0.0,
                                double margin_required = 2.0);

// Standard deviation (units of 1/2N of the circle) of the q -> 2N rounding error on the phase.
double modswitch_sigma(std::size_t n);

// Heuristic std (q units) of bootstrapped ciphertext noise: blind rotation plus key switching,
// including gadget rounding when B^l < q. Zero for noiseless keys with exact decompositions.
double predicted_bootstrap_sigma(const FheParams& params);

}  // namespace fdsnn
