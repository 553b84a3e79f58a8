#pragma once

#include "fdsnn/fft.hpp"
#include "fdsnn/params.hpp"
#include "fdsnn/random.hpp"
#include "fdsnn/ring.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace fdsnn {

struct RlweSecretKey {
  NegacyclicPoly z;  // binary coefficients

  std::size_t degree() const { return z.degree(); }
  bool operator==(const RlweSecretKey&) const = default;
};

struct RlweCiphertext {
  NegacyclicPoly a;
  NegacyclicPoly b;

  RlweCiphertext() = default;
  explicit RlweCiphertext(std::size_t n) : a(n), b(n) {}
  RlweCiphertext(NegacyclicPoly a_, NegacyclicPoly b_) : a(std::move(a_)), b(std::move(b_)) {}
  bool operator==(const RlweCiphertext&) const = default;
};

RlweSecretKey rlwe_keygen(std::size_t n, Rng& rng);

// b = a*z + e + mu.
RlweCiphertext rlwe_encrypt_raw(const NegacyclicPoly& mu, const RlweSecretKey& key, const Modulus& q,
                                double sigma, Rng& rng);
// Coefficients of m must lie in the centered Z_p.
RlweCiphertext rlwe_encrypt(const std::vector<std::int64_t>& m, const RlweSecretKey& key,
                            const FheParams& params, Rng& rng);
NegacyclicPoly rlwe_phase(const RlweCiphertext& ct, const RlweSecretKey& key, const Modulus& q);
std::vector<std::int64_t> rlwe_decrypt(const RlweCiphertext& ct, const RlweSecretKey& key,
                                       const FheParams& params);
RlweCiphertext rlwe_add(const RlweCiphertext& x, const RlweCiphertext& y, const Modulus& q);
RlweCiphertext rlwe_sub(const RlweCiphertext& x, const RlweCiphertext& y, const Modulus& q);

// Signed digits d_0..d_{l-1} in (-B/2, B/2] with x ~ sum_i d_i * q / B^(i+1).
void gadget_decompose_coeff(Coeff x, const GadgetParams& g, const Modulus& q, std::int32_t* digits);
// Level-major: result[i][k] is digit i of coefficient k.
std::vector<std::vector<std::int32_t>> gadget_decompose(const NegacyclicPoly& poly,
                                                        const GadgetParams& g, const Modulus& q);
// q / B^(i+1) for i < levels.
std::vector<Coeff> gadget_vector(const GadgetParams& g, const Modulus& q);

// Rows 0..l-1 carry m * g_i in the a-part, rows l..2l-1 in the b-part.
struct RgswCiphertext {
  GadgetParams gadget;
  std::vector<RlweCiphertext> rows;

  bool operator==(const RgswCiphertext&) const = default;
};

RgswCiphertext rgsw_encrypt(const NegacyclicPoly& m, const RlweSecretKey& key, const FheParams& params,
                            double sigma, Rng& rng);
// Encrypts the constant polynomial `bit`; bit outside {0,1} is a DomainError.
RgswCiphertext rgsw_encrypt_bit(int bit, const RlweSecretKey& key, const FheParams& params,
                                double sigma, Rng& rng);

// RGSW ciphertext in the transform domain, split into 16-bit limbs, ready for external products.
class RgswFft {
 public:
  RgswFft() = default;
  RgswFft(const RgswCiphertext& ct, const Modulus& q);

  std::size_t degree() const { return n_; }
  unsigned levels() const { return gadget_.levels; }
  const GadgetParams& gadget() const { return gadget_; }
  unsigned limbs() const { return limbs_; }
  // Spectrum of row r, component c (0 = a, 1 = b), limb l.
  const Cplx* spectrum(std::size_t r, int c, unsigned l) const {
    return spec_.data() + ((r * 2 + c) * limbs_ + l) * (n_ / 2);
  }

 private:
  Cplx* spectrum_mut(std::size_t r, int c, unsigned l) {
    return spec_.data() + ((r * 2 + c) * limbs_ + l) * (n_ / 2);
  }

  std::size_t n_ = 0;
  GadgetParams gadget_;
  unsigned limbs_ = 1;
  Spectrum spec_;
};

RlweCiphertext external_product(const RlweCiphertext& ct, const RgswFft& g, const Modulus& q);
void external_product_into(const RlweCiphertext& ct, const RgswFft& g, const Modulus& q,
                           RlweCiphertext& out);
// Schoolbook reference used by tests.
RlweCiphertext external_product_reference(const RlweCiphertext& ct, const RgswCiphertext& g,
                                          const Modulus& q);
// d0 + c ext (d1 - d0): selects d_bit for c = RGSW(bit).
RlweCiphertext cmux(const RgswFft& c, const RlweCiphertext& d0, const RlweCiphertext& d1,
                    const Modulus& q);

}  // namespace fdsnn
