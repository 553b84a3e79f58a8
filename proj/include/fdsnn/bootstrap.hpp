#pragma once

#include "fdsnn/lwe.hpp"
#include "fdsnn/params.hpp"
#include "fdsnn/rgsw.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace fdsnn {

// Lookup table g: Z_p -> Z_p with g(v + p/2) = -g(v) (mod p).
class ProgramFunction {
 public:
  ProgramFunction() = default;
  // Full table indexed by residue r = m mod p, r in [0, p). Rejects non-negacyclic tables.
  static ProgramFunction from_table(std::vector<std::int64_t> by_residue, std::uint64_t p);
  // f is sampled on m in [0, p/2); the lower half follows from antisymmetry.
  static ProgramFunction make(std::uint64_t p, const std::function<std::int64_t(std::int64_t)>& f);

  std::uint64_t p() const { return p_; }
  // g(m) for any integer m (reduced mod p), as a centered residue.
  std::int64_t operator()(std::int64_t m) const;
  const std::vector<std::int64_t>& table() const { return t_; }

  static bool is_negacyclic(const std::vector<std::int64_t>& by_residue, std::uint64_t p);

 private:
  std::uint64_t p_ = 0;
  std::vector<std::int64_t> t_;
};

struct SecretKeySet {
  FheParams params;
  LweSecretKey lwe;   // s, dimension n
  RlweSecretKey ring;  // z, degree N

  // z read as an LWE key of dimension N (the key of sample-extracted ciphertexts).
  LweSecretKey extracted() const;
};

SecretKeySet gen_secret_keys(const FheParams& params, Rng& rng);

// entries[i * levels + j] = LWE_s(z_i * q / B^(j+1)).
struct KeySwitchKey {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  GadgetParams gadget;
  std::vector<LweCiphertext> entries;
};

KeySwitchKey gen_key_switch_key(const LweSecretKey& from, const LweSecretKey& to,
                                const FheParams& params, Rng& rng);
// Dimension mismatch with the key: ParameterError.
LweCiphertext key_switch(const LweCiphertext& ct, const KeySwitchKey& ksk, const Modulus& q);

// Evaluation key. Read-only after construction; the call counter is the only mutable state.
class BootstrapKey {
 public:
  BootstrapKey() : calls_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}
  BootstrapKey(FheParams params, std::vector<RgswCiphertext> bk, KeySwitchKey ksk);

  const FheParams& params() const { return params_; }
  const std::vector<RgswCiphertext>& rgsw() const { return bk_raw_; }
  const std::vector<RgswFft>& rgsw_fft() const { return bk_; }
  const KeySwitchKey& ksk() const { return ksk_; }

  std::uint64_t calls() const { return calls_->load(std::memory_order_relaxed); }
  void reset_calls() const { calls_->store(0, std::memory_order_relaxed); }
  void count_call() const { calls_->fetch_add(1, std::memory_order_relaxed); }

 private:
  FheParams params_;
  std::vector<RgswCiphertext> bk_raw_;
  std::vector<RgswFft> bk_;
  KeySwitchKey ksk_;
  std::shared_ptr<std::atomic<std::uint64_t>> calls_;
};

BootstrapKey gen_bootstrap_key(const SecretKeySet& sk, Rng& rng);

struct SwitchedCiphertext {
  std::vector<std::uint32_t> a;  // in Z_2N
  std::uint32_t b = 0;           // in Z_2N, includes the half-slot offset
};

// q -> 2N modulus switch; q/(2p) is added to b first so each message sits mid-slot.
SwitchedCiphertext mod_switch(const LweCiphertext& ct, const FheParams& params);

// Trivial RLWE ciphertext of X^(-b2N) * sum_i round(q/p * g(floor(i p / 2N))) X^i.
RlweCiphertext initialize_accumulator(const ProgramFunction& g, std::uint64_t b2n,
                                      const FheParams& params);
// GINX: ACC += (X^{a_i} - 1) * (ACC ext RGSW(s_i)).
void blind_rotate(RlweCiphertext& acc, const std::vector<std::uint32_t>& a2n, const BootstrapKey& bk);
// a = (a_0, -a_{N-1}, ..., -a_1), b = b_0.
LweCiphertext sample_extract(const RlweCiphertext& acc, const Modulus& q);

// KeySwitch o Extract o BlindRotate o Initialize, preceded by the modulus switch.
LweCiphertext bootstrap(const ProgramFunction& g, const LweCiphertext& ct, const BootstrapKey& bk);

}  // namespace fdsnn
