#pragma once

#include "fdsnn/params.hpp"
#include "fdsnn/random.hpp"
#include "fdsnn/ring.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fdsnn {

struct LweSecretKey {
  std::vector<std::int32_t> s;  // binary entries

  std::size_t dim() const { return s.size(); }
  bool operator==(const LweSecretKey&) const = default;
};

struct LweCiphertext {
  std::vector<Coeff> a;
  Coeff b = 0;

  LweCiphertext() = default;
  explicit LweCiphertext(std::size_t n) : a(n, 0) {}
  std::size_t dim() const { return a.size(); }
  bool operator==(const LweCiphertext&) const = default;
};

LweSecretKey lwe_keygen(std::size_t n, Rng& rng);
LweSecretKey lwe_keygen(const FheParams& params, Rng& rng);

// round(q/p * m) mod q for m in the centered set {-p/2+1, ..., p/2}; DomainError otherwise.
Coeff encode(std::int64_t m, std::uint64_t p, const Modulus& q);
// Representative of m mod p in {-p/2+1, ..., p/2}.
std::int64_t center_mod(std::int64_t m, std::uint64_t p);
// Centered residue of round(p/q * phase) mod p, in {-p/2+1, ..., p/2}.
std::int64_t decode(Coeff phase, std::uint64_t p, const Modulus& q);

// b = <a, s> + e + mu with e drawn at width sigma.
LweCiphertext lwe_encrypt_raw(Coeff mu, const LweSecretKey& sk, const Modulus& q, double sigma,
                              Rng& rng);
LweCiphertext lwe_encrypt(std::int64_t m, const LweSecretKey& sk, const FheParams& params, Rng& rng);
// Noiseless ciphertext with a = 0.
LweCiphertext lwe_trivial(std::int64_t m, std::size_t n, const FheParams& params);

Coeff lwe_phase(const LweCiphertext& ct, const LweSecretKey& sk, const Modulus& q);
std::int64_t lwe_decrypt(const LweCiphertext& ct, const LweSecretKey& sk, const FheParams& params);

LweCiphertext lwe_add(const LweCiphertext& x, const LweCiphertext& y, const Modulus& q);
LweCiphertext lwe_sub(const LweCiphertext& x, const LweCiphertext& y, const Modulus& q);
void lwe_add_inplace(LweCiphertext& x, const LweCiphertext& y, const Modulus& q);
LweCiphertext add_plain(const LweCiphertext& ct, std::int64_t k, const FheParams& params);

// Sum_j w_j * ct_j. Empty input: DomainError; length or dimension mismatch: ParameterError.
LweCiphertext weight_sum(std::span<const LweCiphertext> cts, std::span<const std::int64_t> weights,
                         const Modulus& q);
LweCiphertext weight_sum(std::span<const LweCiphertext* const> cts,
                         std::span<const std::int64_t> weights, const Modulus& q);

// Instrumentation: centered(b - <a,s> - round(q/p * expected)).
std::int64_t noise_of(const LweCiphertext& ct, const LweSecretKey& sk, std::int64_t expected,
                      const FheParams& params);

}  // namespace fdsnn
