#include <gtest/gtest.h>

#include "fdsnn/errors.hpp"
#include "fdsnn/lwe.hpp"
#include "fdsnn/rgsw.hpp"

#include <cmath>

using namespace fdsnn;

namespace {

FheParams small_ring(std::size_t N = 64, std::uint64_t p = 8) {
  FheParams f = preset("TOY");
  f.N = N;
  f.p = p;
  f.sigma = 1.0;
  return f;
}

std::vector<std::int64_t> monomial(std::size_t n, std::int64_t k) {
  std::vector<std::int64_t> m(n, 0);
  k %= static_cast<std::int64_t>(2 * n);
  if (k < 0) k += 2 * n;
  if (k < static_cast<std::int64_t>(n))
    m[k] = 1;
  else
    m[k - n] = -1;
  return m;
}

NegacyclicPoly monomial_poly(std::size_t n, std::int64_t k, const Modulus& q) {
  NegacyclicPoly out(n);
  const auto m = monomial(n, k);
  for (std::size_t i = 0; i < n; ++i) out[i] = q.reduce(m[i]);
  return out;
}

}  // namespace

TEST(Rlwe, RoundTripAndAdd) {
  const FheParams params = small_ring();
  Rng rng(1);
  const RlweSecretKey key = rlwe_keygen(params.N, rng);
  std::vector<std::int64_t> x(params.N), y(params.N), zero(params.N, 0);
  for (std::size_t i = 0; i < params.N; ++i) {
    x[i] = rng.uniform_int(-3, 4);
    y[i] = rng.uniform_int(-1, 1);
  }
  const RlweCiphertext cx = rlwe_encrypt(x, key, params, rng);
  const RlweCiphertext cy = rlwe_encrypt(y, key, params, rng);
  EXPECT_EQ(rlwe_decrypt(cx, key, params), x);
  EXPECT_EQ(rlwe_decrypt(rlwe_encrypt(zero, key, params, rng), key, params), zero);
  std::vector<std::int64_t> sum(params.N);
  for (std::size_t i = 0; i < params.N; ++i) sum[i] = center_mod(x[i] + y[i], params.p);
  EXPECT_EQ(rlwe_decrypt(rlwe_add(cx, cy, params.modulus()), key, params), sum);
}

TEST(Gadget, DigitPatternAtHalfModulus) {
  const Modulus q(4096);
  const GadgetParams g{4, 3};
  std::int32_t d[3];
  gadget_decompose_coeff(2048, g, q, d);
  EXPECT_EQ(d[0], 8);
  EXPECT_EQ(d[1], 0);
  EXPECT_EQ(d[2], 0);
  gadget_decompose_coeff(0, g, q, d);
  EXPECT_EQ(d[0] | d[1] | d[2], 0);
}

TEST(Gadget, RecompositionWithinRemainder) {
  Rng rng(2);
  struct Case {
    std::uint64_t q;
    GadgetParams g;
  };
  for (const Case& c : {Case{4096, {4, 3}}, Case{std::uint64_t(1) << 26, {13, 2}},
                        Case{std::uint64_t(1) << 32, {10, 3}}, Case{std::uint64_t(1) << 26, {6, 3}}}) {
    const Modulus q(c.q);
    const auto gv = gadget_vector(c.g, q);
    const double bound = double(c.q) / (2.0 * std::pow(2.0, double(c.g.base_log) * c.g.levels));
    for (int t = 0; t < 1000; ++t) {
      NegacyclicPoly p(16);
      for (std::size_t i = 0; i < 16; ++i) p[i] = rng.uniform(q);
      const auto digits = gadget_decompose(p, c.g, q);
      for (std::size_t k = 0; k < 16; ++k) {
        Coeff r = 0;
        for (unsigned i = 0; i < c.g.levels; ++i) {
          ASSERT_GT(digits[i][k], -std::int32_t(c.g.base() / 2));
          ASSERT_LE(digits[i][k], std::int32_t(c.g.base() / 2));
          r = q.add(r, q.mul(gv[i], digits[i][k]));
        }
        ASSERT_LE(std::abs(q.centered(q.sub(p[k], r))), bound);
      }
    }
  }
}

TEST(ExternalProduct, MatchesSchoolbookReference) {
  const FheParams params = preset("DESK");
  Rng rng(3);
  const RlweSecretKey key = rlwe_keygen(params.N, rng);
  const Modulus q = params.modulus();
  const RgswCiphertext g = rgsw_encrypt_bit(1, key, params, 3.0, rng);
  RlweCiphertext ct(params.N);
  for (std::size_t i = 0; i < params.N; ++i) {
    ct.a[i] = rng.uniform(q);
    ct.b[i] = rng.uniform(q);
  }
  EXPECT_EQ(external_product(ct, RgswFft(g, q), q), external_product_reference(ct, g, q));
}

TEST(ExternalProduct, BitSelection) {
  const FheParams params = small_ring(256, 16);
  Rng rng(4);
  const RlweSecretKey key = rlwe_keygen(params.N, rng);
  const Modulus q = params.modulus();
  std::vector<std::int64_t> m(params.N);
  for (auto& x : m) x = rng.uniform_int(-7, 8);
  const RlweCiphertext ct = rlwe_encrypt(m, key, params, rng);
  const RgswFft one(rgsw_encrypt_bit(1, key, params, 0.0, rng), q);
  const RgswFft zero(rgsw_encrypt_bit(0, key, params, 0.0, rng), q);
  EXPECT_EQ(rlwe_decrypt(external_product(ct, one, q), key, params), m);
  EXPECT_EQ(rlwe_decrypt(external_product(ct, zero, q), key, params), std::vector<std::int64_t>(params.N, 0));
  EXPECT_THROW(rgsw_encrypt_bit(2, key, params, 0.0, rng), DomainError);
}

TEST(ExternalProduct, MonomialExponentsAdd) {
  const FheParams params = small_ring(64, 8);
  Rng rng(5);
  const RlweSecretKey key = rlwe_keygen(params.N, rng);
  const Modulus q = params.modulus();
  const std::int64_t n2 = 2 * static_cast<std::int64_t>(params.N);
  const RlweCiphertext x2 = rlwe_encrypt(monomial(params.N, 2), key, params, rng);
  const RgswFft x3(rgsw_encrypt(monomial_poly(params.N, 3, q), key, params, 0.0, rng), q);
  EXPECT_EQ(rlwe_decrypt(external_product(x2, x3, q), key, params), monomial(params.N, 5));

  std::vector<RgswFft> gs;
  for (std::int64_t k = 0; k < n2; ++k) gs.emplace_back(rgsw_encrypt(monomial_poly(params.N, k, q), key, params, 0.0, rng), q);
  for (std::int64_t j = 0; j < n2; ++j) {
    const RlweCiphertext xj = rlwe_encrypt(monomial(params.N, j), key, params, rng);
    for (std::int64_t k = 0; k < n2; ++k)
      ASSERT_EQ(rlwe_decrypt(external_product(xj, gs[k], q), key, params), monomial(params.N, j + k))
          << "j=" << j << " k=" << k;
    ASSERT_EQ(rlwe_decrypt(external_product(xj, gs[(n2 - j) % n2], q), key, params), monomial(params.N, 0));
  }
}

TEST(ExternalProduct, NoiseWithinPredictedBound) {
  FheParams params = preset("TOY");
  Rng rng(6);
  const RlweSecretKey key = rlwe_keygen(params.N, rng);
  const Modulus q = params.modulus();
  const double sigma_g = 1.0;
  const RgswCiphertext g = rgsw_encrypt_bit(1, key, params, sigma_g, rng);
  const RlweCiphertext ct = rlwe_encrypt(std::vector<std::int64_t>(params.N, 1), key, params, rng);
  const RlweCiphertext out = external_product(ct, RgswFft(g, q), q);
  const NegacyclicPoly in_phase = rlwe_phase(ct, key, q), out_phase = rlwe_phase(out, key, q);
  // l N (B/2) 6 sigma from the RGSW rows plus the remainder q/(2 B^l) times (1 + ||z||_1).
  const double bound = 2.0 * params.gadget.levels * params.N * (params.gadget.base() / 2.0) * 6 * sigma_g +
                       (1.0 + params.N) * double(params.q) / (2.0 * std::pow(2.0, 12.0));
  for (std::size_t i = 0; i < params.N; ++i)
    ASSERT_LE(std::abs(q.centered(q.sub(out_phase[i], in_phase[i]))), bound);
}

TEST(Cmux, SelectsBranch) {
  const FheParams params = small_ring(128, 8);
  Rng rng(7);
  const RlweSecretKey key = rlwe_keygen(params.N, rng);
  const Modulus q = params.modulus();
  for (int t = 0; t < 20; ++t) {
    std::vector<std::int64_t> m0(params.N), m1(params.N);
    for (std::size_t i = 0; i < params.N; ++i) {
      m0[i] = rng.uniform_int(-3, 4);
      m1[i] = rng.uniform_int(-3, 4);
    }
    const int bit = rng.bit();
    const RgswFft c(rgsw_encrypt_bit(bit, key, params, 0.0, rng), q);
    const RlweCiphertext d0 = rlwe_encrypt(m0, key, params, rng), d1 = rlwe_encrypt(m1, key, params, rng);
    ASSERT_EQ(rlwe_decrypt(cmux(c, d0, d1, q), key, params), bit ? m1 : m0);
  }
}
