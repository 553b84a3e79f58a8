#include "fdsnn/rgsw.hpp"

#include "fdsnn/errors.hpp"
#include "fdsnn/lwe.hpp"

#include <string>

namespace fdsnn {

RlweSecretKey rlwe_keygen(std::size_t n, Rng& rng) {
  RlweSecretKey k{NegacyclicPoly(n)};
  for (std::size_t i = 0; i < n; ++i) k.z[i] = static_cast<Coeff>(rng.bit());
  return k;
}

RlweCiphertext rlwe_encrypt_raw(const NegacyclicPoly& mu, const RlweSecretKey& key, const Modulus& q,
                                double sigma, Rng& rng) {
  const std::size_t n = key.degree();
  if (mu.degree() != n) throw ParameterError("message/key ring degree mismatch");
  RlweCiphertext ct(n);
  for (std::size_t i = 0; i < n; ++i) ct.a[i] = rng.uniform(q);
  ct.b = poly_mul(ct.a, key.z, q);
  for (std::size_t i = 0; i < n; ++i)
    ct.b[i] = q.reduce_u(std::uint64_t(ct.b[i]) + mu[i] + static_cast<std::uint64_t>(rng.gaussian(sigma)));
  return ct;
}

RlweCiphertext rlwe_encrypt(const std::vector<std::int64_t>& m, const RlweSecretKey& key,
                            const FheParams& params, Rng& rng) {
  const Modulus q = params.modulus();
  if (m.size() != key.degree()) throw ParameterError("message length must equal N");
  NegacyclicPoly mu(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) mu[i] = encode(m[i], params.p, q);
  return rlwe_encrypt_raw(mu, key, q, params.sigma, rng);
}

NegacyclicPoly rlwe_phase(const RlweCiphertext& ct, const RlweSecretKey& key, const Modulus& q) {
  return poly_sub(ct.b, poly_mul(ct.a, key.z, q), q);
}

std::vector<std::int64_t> rlwe_decrypt(const RlweCiphertext& ct, const RlweSecretKey& key,
                                       const FheParams& params) {
  const Modulus q = params.modulus();
  const NegacyclicPoly ph = rlwe_phase(ct, key, q);
  std::vector<std::int64_t> m(ph.degree());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = decode(ph[i], params.p, q);
  return m;
}

RlweCiphertext rlwe_add(const RlweCiphertext& x, const RlweCiphertext& y, const Modulus& q) {
  return {poly_add(x.a, y.a, q), poly_add(x.b, y.b, q)};
}

RlweCiphertext rlwe_sub(const RlweCiphertext& x, const RlweCiphertext& y, const Modulus& q) {
  return {poly_sub(x.a, y.a, q), poly_sub(x.b, y.b, q)};
}

void gadget_decompose_coeff(Coeff x, const GadgetParams& g, const Modulus& q, std::int32_t* digits) {
  const unsigned total = g.base_log * g.levels;
  const unsigned drop = q.log2() - total;
  std::uint64_t y = x;
  if (drop > 0) y = (y + (std::uint64_t(1) << (drop - 1))) >> drop;
  y &= (std::uint64_t(1) << total) - 1;
  const std::uint64_t mask = g.base() - 1;
  const std::int64_t half = static_cast<std::int64_t>(g.base() / 2);
  for (int i = static_cast<int>(g.levels) - 1; i >= 0; --i) {
    std::int64_t d = static_cast<std::int64_t>(y & mask);
    y >>= g.base_log;
    if (d > half) {
      d -= static_cast<std::int64_t>(g.base());
      y += 1;
    }
    digits[i] = static_cast<std::int32_t>(d);
  }
}

std::vector<std::vector<std::int32_t>> gadget_decompose(const NegacyclicPoly& poly,
                                                        const GadgetParams& g, const Modulus& q) {
  std::vector<std::vector<std::int32_t>> out(g.levels, std::vector<std::int32_t>(poly.degree()));
  std::vector<std::int32_t> d(g.levels);
  for (std::size_t k = 0; k < poly.degree(); ++k) {
    gadget_decompose_coeff(poly[k], g, q, d.data());
    for (unsigned i = 0; i < g.levels; ++i) out[i][k] = d[i];
  }
  return out;
}

std::vector<Coeff> gadget_vector(const GadgetParams& g, const Modulus& q) {
  std::vector<Coeff> v(g.levels);
  for (unsigned i = 0; i < g.levels; ++i)
    v[i] = q.reduce_u(std::uint64_t(1) << (q.log2() - g.base_log * (i + 1)));
  return v;
}

RgswCiphertext rgsw_encrypt(const NegacyclicPoly& m, const RlweSecretKey& key, const FheParams& params,
                            double sigma, Rng& rng) {
  const Modulus q = params.modulus();
  const std::size_t n = key.degree();
  const auto gv = gadget_vector(params.gadget, q);
  const unsigned l = params.gadget.levels;
  RgswCiphertext ct{params.gadget, {}};
  ct.rows.reserve(2 * l);
  const NegacyclicPoly zero(n);
  for (unsigned part = 0; part < 2; ++part) {
    for (unsigned i = 0; i < l; ++i) {
      RlweCiphertext row = rlwe_encrypt_raw(zero, key, q, sigma, rng);
      NegacyclicPoly& target = part == 0 ? row.a : row.b;
      for (std::size_t k = 0; k < n; ++k) target[k] = q.add(target[k], q.mul(m[k], gv[i]));
      ct.rows.push_back(std::move(row));
    }
  }
  return ct;
}

RgswCiphertext rgsw_encrypt_bit(int bit, const RlweSecretKey& key, const FheParams& params,
                                double sigma, Rng& rng) {
  if (bit != 0 && bit != 1) throw DomainError("rgsw_encrypt_bit expects 0 or 1, got " + std::to_string(bit));
  NegacyclicPoly m(key.degree());
  m[0] = static_cast<Coeff>(bit);
  return rgsw_encrypt(m, key, params, sigma, rng);
}

RgswFft::RgswFft(const RgswCiphertext& ct, const Modulus& q) : gadget_(ct.gadget) {
  if (ct.rows.size() != 2 * ct.gadget.levels) throw ParameterError("RGSW row count must be 2l");
  n_ = ct.rows[0].a.degree();
  limbs_ = q.log2() > 16 ? 2 : 1;
  const NegacyclicFft& fft = NegacyclicFft::instance(n_);
  const std::size_t m = n_ / 2;
  spec_.assign(ct.rows.size() * 2 * limbs_ * m, Cplx{});
  std::vector<std::int64_t> lo(n_), hi(n_);
  for (std::size_t r = 0; r < ct.rows.size(); ++r) {
    for (int c = 0; c < 2; ++c) {
      const NegacyclicPoly& poly = c == 0 ? ct.rows[r].a : ct.rows[r].b;
      split_limbs(poly.data(), n_, q, lo.data(), hi.data());
      fft.forward(lo.data(), spectrum_mut(r, c, 0));
      if (limbs_ == 2) fft.forward(hi.data(), spectrum_mut(r, c, 1));
    }
  }
}

namespace {

struct ExtScratch {
  std::vector<std::int32_t> digits;
  std::vector<std::int32_t> dig_tmp;
  Spectrum dspec;
  Spectrum acc;
  std::vector<std::int64_t> out;
};

ExtScratch& ext_scratch(std::size_t n, unsigned levels, unsigned limbs) {
  thread_local ExtScratch s;
  const std::size_t rows = 2 * levels;
  if (s.digits.size() < rows * n) s.digits.resize(rows * n);
  if (s.dig_tmp.size() < levels) s.dig_tmp.resize(levels);
  if (s.dspec.size() < rows * n / 2) s.dspec.resize(rows * n / 2);
  if (s.acc.size() < 2 * limbs * n / 2) s.acc.resize(2 * limbs * n / 2);
  if (s.out.size() < n) s.out.resize(n);
  return s;
}

}  // namespace

void external_product_into(const RlweCiphertext& ct, const RgswFft& g, const Modulus& q,
                           RlweCiphertext& out) {
  const std::size_t n = g.degree();
  if (ct.a.degree() != n || ct.b.degree() != n) throw ParameterError("external product degree mismatch");
  const unsigned l = g.levels();
  const unsigned limbs = g.limbs();
  const std::size_t m = n / 2;
  ExtScratch& s = ext_scratch(n, l, limbs);
  const NegacyclicFft& fft = NegacyclicFft::instance(n);

  const unsigned base_log = g.gadget().base_log;
  const unsigned total = base_log * l;
  const unsigned drop = q.log2() - total;
  const std::uint64_t round = drop > 0 ? std::uint64_t(1) << (drop - 1) : 0;
  const std::uint64_t keep = (std::uint64_t(1) << total) - 1;
  const std::uint64_t mask = (std::uint64_t(1) << base_log) - 1;
  const std::int64_t half = std::int64_t(1) << (base_log - 1);
  for (int c = 0; c < 2; ++c) {
    const Coeff* src = (c == 0 ? ct.a : ct.b).data();
    std::int32_t* dst = s.digits.data() + c * l * n;
    for (std::size_t k = 0; k < n; ++k) {
      std::uint64_t y = ((std::uint64_t(src[k]) + round) >> drop) & keep;
      for (int i = static_cast<int>(l) - 1; i >= 0; --i) {
        std::int64_t d = static_cast<std::int64_t>(y & mask);
        y >>= base_log;
        const std::int64_t carry = d > half;
        d -= carry << base_log;
        y += static_cast<std::uint64_t>(carry);
        dst[i * n + k] = static_cast<std::int32_t>(d);
      }
    }
  }
  for (std::size_t r = 0; r < 2 * l; ++r) fft.forward(s.digits.data() + r * n, s.dspec.data() + r * m);

  if (out.a.degree() != n) out = RlweCiphertext(n);
  for (int c = 0; c < 2; ++c) {
    NegacyclicPoly& target = c == 0 ? out.a : out.b;
    for (unsigned limb = 0; limb < limbs; ++limb) {
      Cplx* acc = s.acc.data() + (c * limbs + limb) * m;
      std::fill(acc, acc + m, Cplx{});
      for (std::size_t r = 0; r < 2 * l; ++r)
        spectrum_mul_add(acc, s.dspec.data() + r * m, g.spectrum(r, c, limb), m);
      fft.inverse(acc, s.out.data());
      if (limb == 0) {
        for (std::size_t k = 0; k < n; ++k) target[k] = q.reduce(s.out[k]);
      } else {
        for (std::size_t k = 0; k < n; ++k)
          target[k] = q.add(target[k], q.reduce_u(static_cast<std::uint64_t>(s.out[k]) << 16));
      }
    }
  }
}

RlweCiphertext external_product(const RlweCiphertext& ct, const RgswFft& g, const Modulus& q) {
  RlweCiphertext out(g.degree());
  external_product_into(ct, g, q, out);
  return out;
}

RlweCiphertext external_product_reference(const RlweCiphertext& ct, const RgswCiphertext& g,
                                          const Modulus& q) {
  const std::size_t n = ct.a.degree();
  const unsigned l = g.gadget.levels;
  const auto da = gadget_decompose(ct.a, g.gadget, q);
  const auto db = gadget_decompose(ct.b, g.gadget, q);
  RlweCiphertext out(n);
  auto accumulate = [&](const std::vector<std::int32_t>& d, const RlweCiphertext& row) {
    NegacyclicPoly dp(n);
    for (std::size_t k = 0; k < n; ++k) dp[k] = q.reduce(d[k]);
    out.a = poly_add(out.a, poly_mul_schoolbook(dp, row.a, q), q);
    out.b = poly_add(out.b, poly_mul_schoolbook(dp, row.b, q), q);
  };
  for (unsigned i = 0; i < l; ++i) accumulate(da[i], g.rows[i]);
  for (unsigned i = 0; i < l; ++i) accumulate(db[i], g.rows[l + i]);
  return out;
}

RlweCiphertext cmux(const RgswFft& c, const RlweCiphertext& d0, const RlweCiphertext& d1,
                    const Modulus& q) {
  return rlwe_add(d0, external_product(rlwe_sub(d1, d0, q), c, q), q);
}

}  // namespace fdsnn
