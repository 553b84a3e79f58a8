#include "fdsnn/lwe.hpp"

#include "fdsnn/errors.hpp"

#include <string>

namespace fdsnn {

LweSecretKey lwe_keygen(std::size_t n, Rng& rng) {
  LweSecretKey k;
  k.s.resize(n);
  for (auto& v : k.s) v = rng.bit();
  return k;
}

LweSecretKey lwe_keygen(const FheParams& params, Rng& rng) { return lwe_keygen(params.n, rng); }

Coeff encode(std::int64_t m, std::uint64_t p, const Modulus& q) {
  const std::int64_t half = static_cast<std::int64_t>(p / 2);
  if (m <= -half || m > half)
    throw DomainError("plaintext " + std::to_string(m) + " outside Z_" + std::to_string(p) +
                      " = {" + std::to_string(-half + 1) + ", ..., " + std::to_string(half) + "}");
  return q.mul(static_cast<Coeff>(q.value() / p), m);
}

std::int64_t center_mod(std::int64_t m, std::uint64_t p) {
  const std::int64_t pp = static_cast<std::int64_t>(p);
  std::int64_t r = ((m % pp) + pp) % pp;
  return r > pp / 2 ? r - pp : r;
}

std::int64_t decode(Coeff phase, std::uint64_t p, const Modulus& q) {
  const std::int64_t m = static_cast<std::int64_t>(rescale(phase, q.value(), p));
  const std::int64_t half = static_cast<std::int64_t>(p / 2);
  return m > half ? m - static_cast<std::int64_t>(p) : m;
}

LweCiphertext lwe_encrypt_raw(Coeff mu, const LweSecretKey& sk, const Modulus& q, double sigma,
                              Rng& rng) {
  LweCiphertext ct(sk.dim());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < sk.dim(); ++i) {
    ct.a[i] = rng.uniform(q);
    if (sk.s[i]) acc += ct.a[i];
  }
  ct.b = q.reduce_u(acc + mu + static_cast<std::uint64_t>(rng.gaussian(sigma)));
  return ct;
}

LweCiphertext lwe_encrypt(std::int64_t m, const LweSecretKey& sk, const FheParams& params,
                          Rng& rng) {
  const Modulus q = params.modulus();
  return lwe_encrypt_raw(encode(m, params.p, q), sk, q, params.sigma, rng);
}

LweCiphertext lwe_trivial(std::int64_t m, std::size_t n, const FheParams& params) {
  LweCiphertext ct(n);
  ct.b = encode(m, params.p, params.modulus());
  return ct;
}

Coeff lwe_phase(const LweCiphertext& ct, const LweSecretKey& sk, const Modulus& q) {
  if (ct.dim() != sk.dim()) throw ParameterError("ciphertext/key dimension mismatch");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < ct.dim(); ++i)
    if (sk.s[i]) acc += ct.a[i];
  return q.reduce_u(std::uint64_t(ct.b) - acc);
}

std::int64_t lwe_decrypt(const LweCiphertext& ct, const LweSecretKey& sk, const FheParams& params) {
  const Modulus q = params.modulus();
  return decode(lwe_phase(ct, sk, q), params.p, q);
}

void lwe_add_inplace(LweCiphertext& x, const LweCiphertext& y, const Modulus& q) {
  if (x.dim() != y.dim()) throw ParameterError("ciphertext dimension mismatch");
  for (std::size_t i = 0; i < x.dim(); ++i) x.a[i] = q.add(x.a[i], y.a[i]);
  x.b = q.add(x.b, y.b);
}

LweCiphertext lwe_add(const LweCiphertext& x, const LweCiphertext& y, const Modulus& q) {
  LweCiphertext r = x;
  lwe_add_inplace(r, y, q);
  return r;
}

LweCiphertext lwe_sub(const LweCiphertext& x, const LweCiphertext& y, const Modulus& q) {
  if (x.dim() != y.dim()) throw ParameterError("ciphertext dimension mismatch");
  LweCiphertext r(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) r.a[i] = q.sub(x.a[i], y.a[i]);
  r.b = q.sub(x.b, y.b);
  return r;
}

LweCiphertext add_plain(const LweCiphertext& ct, std::int64_t k, const FheParams& params) {
  const Modulus q = params.modulus();
  LweCiphertext r = ct;
  r.b = q.add(r.b, encode(center_mod(k, params.p), params.p, q));
  return r;
}

namespace {

template <class Get>
LweCiphertext weight_sum_impl(std::size_t count, Get get, std::span<const std::int64_t> w,
                              const Modulus& q) {
  if (count == 0) throw DomainError("weight_sum of an empty sequence");
  if (count != w.size())
    throw ParameterError("weight_sum: " + std::to_string(count) + " ciphertexts but " +
                         std::to_string(w.size()) + " weights");
  const std::size_t n = get(0).dim();
  std::vector<std::uint64_t> acc(n, 0);
  std::uint64_t b = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const LweCiphertext& c = get(j);
    if (c.dim() != n) throw ParameterError("weight_sum: ciphertext dimension mismatch");
    const std::uint64_t wj = static_cast<std::uint64_t>(w[j]);
    if (wj == 0) continue;
    for (std::size_t i = 0; i < n; ++i) acc[i] += wj * c.a[i];
    b += wj * c.b;
  }
  LweCiphertext r(n);
  for (std::size_t i = 0; i < n; ++i) r.a[i] = q.reduce_u(acc[i]);
  r.b = q.reduce_u(b);
  return r;
}

}  // namespace

LweCiphertext weight_sum(std::span<const LweCiphertext> cts, std::span<const std::int64_t> weights,
                         const Modulus& q) {
  return weight_sum_impl(cts.size(), [&](std::size_t j) -> const LweCiphertext& { return cts[j]; },
                         weights, q);
}

LweCiphertext weight_sum(std::span<const LweCiphertext* const> cts,
                         std::span<const std::int64_t> weights, const Modulus& q) {
  return weight_sum_impl(cts.size(), [&](std::size_t j) -> const LweCiphertext& { return *cts[j]; },
                         weights, q);
}

std::int64_t noise_of(const LweCiphertext& ct, const LweSecretKey& sk, std::int64_t expected,
                      const FheParams& params) {
  const Modulus q = params.modulus();
  const Coeff ph = lwe_phase(ct, sk, q);
  return q.centered(q.sub(ph, encode(center_mod(expected, params.p), params.p, q)));
}

}  // namespace fdsnn
