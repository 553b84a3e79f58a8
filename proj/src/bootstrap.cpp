#include "fdsnn/bootstrap.hpp"

#include "fdsnn/errors.hpp"

#include <string>

namespace fdsnn {

bool ProgramFunction::is_negacyclic(const std::vector<std::int64_t>& t, std::uint64_t p) {
  if (t.size() != p || p % 2 != 0) return false;
  const std::size_t h = p / 2;
  for (std::size_t r = 0; r < h; ++r)
    if (center_mod(t[r] + t[r + h], p) != 0) return false;
  return true;
}

ProgramFunction ProgramFunction::from_table(std::vector<std::int64_t> by_residue, std::uint64_t p) {
  if (!is_power_of_two(p) || p < 2) throw ParameterError("program modulus must be an even power of two");
  if (by_residue.size() != p)
    throw ParameterError("program table has " + std::to_string(by_residue.size()) + " entries, expected " +
                         std::to_string(p));
  if (!is_negacyclic(by_residue, p))
    throw DomainError("program table violates g(v + p/2) = -g(v)");
  ProgramFunction g;
  g.p_ = p;
  g.t_ = std::move(by_residue);
  for (auto& v : g.t_) v = center_mod(v, p);
  return g;
}

ProgramFunction ProgramFunction::make(std::uint64_t p, const std::function<std::int64_t(std::int64_t)>& f) {
  if (!is_power_of_two(p) || p < 2) throw ParameterError("program modulus must be an even power of two");
  std::vector<std::int64_t> t(p);
  const std::size_t h = p / 2;
  for (std::size_t r = 0; r < h; ++r) {
    t[r] = center_mod(f(static_cast<std::int64_t>(r)), p);
    t[r + h] = center_mod(-t[r], p);
  }
  ProgramFunction g;
  g.p_ = p;
  g.t_ = std::move(t);
  return g;
}

std::int64_t ProgramFunction::operator()(std::int64_t m) const {
  const std::int64_t pp = static_cast<std::int64_t>(p_);
  return t_[static_cast<std::size_t>(((m % pp) + pp) % pp)];
}

LweSecretKey SecretKeySet::extracted() const {
  LweSecretKey k;
  k.s.resize(ring.degree());
  for (std::size_t i = 0; i < ring.degree(); ++i) k.s[i] = static_cast<std::int32_t>(ring.z[i]);
  return k;
}

SecretKeySet gen_secret_keys(const FheParams& params, Rng& rng) {
  params.validate();
  SecretKeySet sk;
  sk.params = params;
  sk.lwe = lwe_keygen(params.n, rng);
  sk.ring = rlwe_keygen(params.N, rng);
  return sk;
}

KeySwitchKey gen_key_switch_key(const LweSecretKey& from, const LweSecretKey& to, const FheParams& params,
                                Rng& rng) {
  const Modulus q = params.modulus();
  KeySwitchKey k;
  k.in_dim = from.dim();
  k.out_dim = to.dim();
  k.gadget = params.ks;
  const auto gv = gadget_vector(params.ks, q);
  k.entries.reserve(k.in_dim * params.ks.levels);
  for (std::size_t i = 0; i < k.in_dim; ++i)
    for (unsigned j = 0; j < params.ks.levels; ++j)
      k.entries.push_back(lwe_encrypt_raw(q.mul(gv[j], from.s[i]), to, q, params.sigma_ks, rng));
  return k;
}

LweCiphertext key_switch(const LweCiphertext& ct, const KeySwitchKey& ksk, const Modulus& q) {
  if (ct.dim() != ksk.in_dim)
    throw ParameterError("key_switch: ciphertext dimension " + std::to_string(ct.dim()) +
                         " does not match key-switching key input dimension " + std::to_string(ksk.in_dim));
  const unsigned l = ksk.gadget.levels;
  const std::size_t n = ksk.out_dim;
  std::vector<std::uint64_t> acc(n, 0);
  std::uint64_t b = ct.b;
  std::int32_t digits[64];
  for (std::size_t i = 0; i < ct.dim(); ++i) {
    gadget_decompose_coeff(ct.a[i], ksk.gadget, q, digits);
    for (unsigned j = 0; j < l; ++j) {
      const std::int64_t d = digits[j];
      if (d == 0) continue;
      const LweCiphertext& e = ksk.entries[i * l + j];
      const std::uint64_t w = static_cast<std::uint64_t>(-d);
      for (std::size_t k = 0; k < n; ++k) acc[k] += w * e.a[k];
      b += w * e.b;
    }
  }
  LweCiphertext out(n);
  for (std::size_t k = 0; k < n; ++k) out.a[k] = q.reduce_u(acc[k]);
  out.b = q.reduce_u(b);
  return out;
}

BootstrapKey::BootstrapKey(FheParams params, std::vector<RgswCiphertext> bk, KeySwitchKey ksk)
    : params_(std::move(params)),
      bk_raw_(std::move(bk)),
      ksk_(std::move(ksk)),
      calls_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  params_.validate();
  if (bk_raw_.size() != params_.n) throw ParameterError("bootstrapping key must hold n RGSW ciphertexts");
  if (ksk_.in_dim != params_.N || ksk_.out_dim != params_.n)
    throw ParameterError("key-switching key dimensions do not match parameters");
  const Modulus q = params_.modulus();
  bk_.reserve(bk_raw_.size());
  for (const auto& c : bk_raw_) bk_.emplace_back(c, q);
}

BootstrapKey gen_bootstrap_key(const SecretKeySet& sk, Rng& rng) {
  const FheParams& params = sk.params;
  std::vector<RgswCiphertext> bk;
  bk.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i)
    bk.push_back(rgsw_encrypt_bit(sk.lwe.s[i], sk.ring, params, params.sigma_bk, rng));
  KeySwitchKey ksk = gen_key_switch_key(sk.extracted(), sk.lwe, params, rng);
  return BootstrapKey(params, std::move(bk), std::move(ksk));
}

SwitchedCiphertext mod_switch(const LweCiphertext& ct, const FheParams& params) {
  const std::uint64_t two_n = 2 * params.N;
  SwitchedCiphertext s;
  s.a.resize(ct.dim());
  for (std::size_t i = 0; i < ct.dim(); ++i)
    s.a[i] = static_cast<std::uint32_t>(rescale(ct.a[i], params.q, two_n));
  const std::uint64_t offset = params.q / (2 * params.p);
  s.b = static_cast<std::uint32_t>(rescale((std::uint64_t(ct.b) + offset) & (params.q - 1), params.q, two_n));
  return s;
}

RlweCiphertext initialize_accumulator(const ProgramFunction& g, std::uint64_t b2n, const FheParams& params) {
  if (g.p() != params.p)
    throw ParameterError("program modulus " + std::to_string(g.p()) + " differs from parameter p=" +
                         std::to_string(params.p));
  const Modulus q = params.modulus();
  const std::size_t n = params.N;
  NegacyclicPoly tv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t m = static_cast<std::int64_t>((i * params.p) / (2 * n));
    tv[i] = encode(g(m), params.p, q);
  }
  RlweCiphertext acc(n);
  acc.b = monomial_rotate(tv, -static_cast<std::int64_t>(b2n), q);
  return acc;
}

void blind_rotate(RlweCiphertext& acc, const std::vector<std::uint32_t>& a2n, const BootstrapKey& bk) {
  const FheParams& params = bk.params();
  if (a2n.size() != params.n) throw ParameterError("blind_rotate: mask length differs from n");
  const Modulus q = params.modulus();
  const std::size_t n = params.N;
  thread_local RlweCiphertext diff, prod;
  if (diff.a.degree() != n) {
    diff = RlweCiphertext(n);
    prod = RlweCiphertext(n);
  }
  const auto& keys = bk.rgsw_fft();
  for (std::size_t i = 0; i < a2n.size(); ++i) {
    if (a2n[i] == 0) continue;
    monomial_rotate_into(acc.a.data(), diff.a.data(), n, a2n[i], q);
    monomial_rotate_into(acc.b.data(), diff.b.data(), n, a2n[i], q);
    for (std::size_t k = 0; k < n; ++k) {
      diff.a[k] = q.sub(diff.a[k], acc.a[k]);
      diff.b[k] = q.sub(diff.b[k], acc.b[k]);
    }
    external_product_into(diff, keys[i], q, prod);
    for (std::size_t k = 0; k < n; ++k) {
      acc.a[k] = q.add(acc.a[k], prod.a[k]);
      acc.b[k] = q.add(acc.b[k], prod.b[k]);
    }
  }
}

LweCiphertext sample_extract(const RlweCiphertext& acc, const Modulus& q) {
  const std::size_t n = acc.a.degree();
  LweCiphertext ct(n);
  ct.a[0] = acc.a[0];
  for (std::size_t i = 1; i < n; ++i) ct.a[i] = q.neg(acc.a[n - i]);
  ct.b = acc.b[0];
  return ct;
}

LweCiphertext bootstrap(const ProgramFunction& g, const LweCiphertext& ct, const BootstrapKey& bk) {
  const FheParams& params = bk.params();
  if (ct.dim() != params.n)
    throw ParameterError("bootstrap: input dimension " + std::to_string(ct.dim()) + " differs from n=" +
                         std::to_string(params.n));
  bk.count_call();
  const Modulus q = params.modulus();
  const SwitchedCiphertext s = mod_switch(ct, params);
  RlweCiphertext acc = initialize_accumulator(g, s.b, params);
  blind_rotate(acc, s.a, bk);
  return key_switch(sample_extract(acc, q), bk.ksk(), q);
}

}  // namespace fdsnn
