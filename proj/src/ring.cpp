#include "fdsnn/ring.hpp"

#include "fdsnn/errors.hpp"
#include "fdsnn/fft.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace fdsnn {

bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

unsigned ilog2(std::uint64_t x) { return static_cast<unsigned>(std::bit_width(x) - 1); }

Modulus::Modulus(std::uint64_t q) : q_(q) {
  if (!is_power_of_two(q) || q < 2 || q > (std::uint64_t(1) << 32))
    throw ParameterError("modulus must be a power of two in [2, 2^32], got " + std::to_string(q));
  mask_ = q - 1;
  half_ = q / 2;
  log_ = ilog2(q);
}

namespace {

void check_same(const NegacyclicPoly& a, const NegacyclicPoly& b) {
  if (a.degree() != b.degree())
    throw ParameterError("ring degree mismatch: " + std::to_string(a.degree()) + " vs " +
                         std::to_string(b.degree()));
}

}  // namespace

NegacyclicPoly poly_add(const NegacyclicPoly& a, const NegacyclicPoly& b, const Modulus& q) {
  check_same(a, b);
  NegacyclicPoly r(a.degree());
  for (std::size_t i = 0; i < a.degree(); ++i) r[i] = q.add(a[i], b[i]);
  return r;
}

NegacyclicPoly poly_sub(const NegacyclicPoly& a, const NegacyclicPoly& b, const Modulus& q) {
  check_same(a, b);
  NegacyclicPoly r(a.degree());
  for (std::size_t i = 0; i < a.degree(); ++i) r[i] = q.sub(a[i], b[i]);
  return r;
}

NegacyclicPoly poly_neg(const NegacyclicPoly& a, const Modulus& q) {
  NegacyclicPoly r(a.degree());
  for (std::size_t i = 0; i < a.degree(); ++i) r[i] = q.neg(a[i]);
  return r;
}

NegacyclicPoly poly_scale(const NegacyclicPoly& a, std::int64_t k, const Modulus& q) {
  NegacyclicPoly r(a.degree());
  for (std::size_t i = 0; i < a.degree(); ++i) r[i] = q.mul(a[i], k);
  return r;
}

NegacyclicPoly poly_mul_schoolbook(const NegacyclicPoly& a, const NegacyclicPoly& b,
                                   const Modulus& q) {
  check_same(a, b);
  const std::size_t n = a.degree();
  std::vector<std::uint64_t> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t ai = a[i];
    if (ai == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t prod = ai * b[j];
      const std::size_t k = i + j;
      if (k < n)
        acc[k] += prod;
      else
        acc[k - n] -= prod;
    }
  }
  NegacyclicPoly r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = q.reduce_u(acc[i]);
  return r;
}

NegacyclicPoly poly_mul(const NegacyclicPoly& a, const NegacyclicPoly& b, const Modulus& q) {
  check_same(a, b);
  const std::size_t n = a.degree();
  if (n < 2) return poly_mul_schoolbook(a, b, q);
  const NegacyclicFft& fft = NegacyclicFft::instance(n);
  const std::size_t m = fft.spectrum_size();

  std::vector<std::int64_t> alo(n), ahi(n), blo(n), bhi(n);
  split_limbs(a.data(), n, q, alo.data(), ahi.data());
  split_limbs(b.data(), n, q, blo.data(), bhi.data());

  Spectrum Alo(m), Ahi(m), Blo(m), Bhi(m);
  fft.forward(alo.data(), Alo.data());
  fft.forward(blo.data(), Blo.data());
  std::vector<std::int64_t> out(n);
  NegacyclicPoly r(n);

  Spectrum P(m);
  for (std::size_t k = 0; k < m; ++k) P[k] = Alo[k] * Blo[k];
  fft.inverse(P.data(), out.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = q.reduce(out[i]);
  if (q.log2() <= 16) return r;

  fft.forward(ahi.data(), Ahi.data());
  fft.forward(bhi.data(), Bhi.data());
  for (std::size_t k = 0; k < m; ++k) P[k] = Alo[k] * Bhi[k] + Ahi[k] * Blo[k];
  fft.inverse(P.data(), out.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = q.add(r[i], q.reduce(out[i] * (std::int64_t(1) << 16)));
  for (std::size_t k = 0; k < m; ++k) P[k] = Ahi[k] * Bhi[k];
  fft.inverse(P.data(), out.data());
  for (std::size_t i = 0; i < n; ++i)
    r[i] = q.add(r[i], q.reduce_u(static_cast<std::uint64_t>(out[i]) << 32));
  return r;
}

void monomial_rotate_into(const Coeff* in, Coeff* out, std::size_t n, std::int64_t k,
                          const Modulus& q) {
  const std::int64_t two_n = static_cast<std::int64_t>(2 * n);
  std::int64_t s = k % two_n;
  if (s < 0) s += two_n;
  const bool flip = s >= static_cast<std::int64_t>(n);
  const std::size_t r = static_cast<std::size_t>(flip ? s - static_cast<std::int64_t>(n) : s);
  // out[i + r] = in[i] for i + r < n, and -in[i] past the wrap; a full flip negates everything.
  for (std::size_t i = 0; i < n - r; ++i) out[i + r] = flip ? q.neg(in[i]) : in[i];
  for (std::size_t i = n - r; i < n; ++i) out[i + r - n] = flip ? in[i] : q.neg(in[i]);
}

NegacyclicPoly monomial_rotate(const NegacyclicPoly& p, std::int64_t k, const Modulus& q) {
  NegacyclicPoly r(p.degree());
  if (p.degree() == 0) return r;
  monomial_rotate_into(p.data(), r.data(), p.degree(), k, q);
  return r;
}

std::int64_t div_round(std::int64_t num, std::int64_t den) {
  if (num >= 0) return (num + den / 2) / den;
  return -((-num + den / 2) / den);
}

std::uint64_t rescale(std::uint64_t x, std::uint64_t q1, std::uint64_t q2) {
  if (!is_power_of_two(q1) || !is_power_of_two(q2))
    throw ParameterError("rescale moduli must be powers of two");
  const std::uint64_t m1 = q1 - 1;
  x &= m1;
  const std::int64_t c = x >= q1 / 2 ? static_cast<std::int64_t>(x) - static_cast<std::int64_t>(q1)
                                     : static_cast<std::int64_t>(x);
  std::int64_t y;
  if (q2 >= q1)
    y = c * static_cast<std::int64_t>(q2 / q1);
  else
    y = div_round(c, static_cast<std::int64_t>(q1 / q2));
  return static_cast<std::uint64_t>(y) & (q2 - 1);
}

}  // namespace fdsnn
