#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fdsnn {

using Coeff = std::uint32_t;

// Power-of-two modulus q in [2, 2^32]; residues are kept in [0, q) and reduction is a mask.
class Modulus {
 public:
  explicit Modulus(std::uint64_t q);

  std::uint64_t value() const { return q_; }
  unsigned log2() const { return log_; }
  std::uint64_t mask() const { return mask_; }

  Coeff reduce(std::int64_t x) const {
    return static_cast<Coeff>(static_cast<std::uint64_t>(x) & mask_);
  }
  Coeff reduce_u(std::uint64_t x) const { return static_cast<Coeff>(x & mask_); }
  // Centered representative in [-q/2, q/2).
  std::int64_t centered(Coeff x) const {
    return x >= half_ ? static_cast<std::int64_t>(x) - static_cast<std::int64_t>(q_)
                      : static_cast<std::int64_t>(x);
  }
  Coeff add(Coeff a, Coeff b) const { return reduce_u(std::uint64_t(a) + b); }
  Coeff sub(Coeff a, Coeff b) const { return reduce_u(std::uint64_t(a) - b); }
  Coeff neg(Coeff a) const { return reduce_u(0 - std::uint64_t(a)); }
  Coeff mul(Coeff a, std::int64_t k) const {
    return reduce_u(std::uint64_t(a) * static_cast<std::uint64_t>(k));
  }

  bool operator==(const Modulus& o) const { return q_ == o.q_; }

 private:
  std::uint64_t q_;
  std::uint64_t mask_;
  std::uint64_t half_;
  unsigned log_;
};

bool is_power_of_two(std::uint64_t x);
unsigned ilog2(std::uint64_t x);

// Element of Z_q[X]/(X^N + 1).
class NegacyclicPoly {
 public:
  NegacyclicPoly() = default;
  explicit NegacyclicPoly(std::size_t n) : c_(n, 0) {}
  explicit NegacyclicPoly(std::vector<Coeff> c) : c_(std::move(c)) {}

  std::size_t degree() const { return c_.size(); }
  Coeff& operator[](std::size_t i) { return c_[i]; }
  Coeff operator[](std::size_t i) const { return c_[i]; }
  std::vector<Coeff>& coeffs() { return c_; }
  const std::vector<Coeff>& coeffs() const { return c_; }
  Coeff* data() { return c_.data(); }
  const Coeff* data() const { return c_.data(); }

  bool operator==(const NegacyclicPoly& o) const = default;

 private:
  std::vector<Coeff> c_;
};

NegacyclicPoly poly_add(const NegacyclicPoly& a, const NegacyclicPoly& b, const Modulus& q);
NegacyclicPoly poly_sub(const NegacyclicPoly& a, const NegacyclicPoly& b, const Modulus& q);
NegacyclicPoly poly_neg(const NegacyclicPoly& a, const Modulus& q);
NegacyclicPoly poly_scale(const NegacyclicPoly& a, std::int64_t k, const Modulus& q);

// O(N^2) reference product.
NegacyclicPoly poly_mul_schoolbook(const NegacyclicPoly& a, const NegacyclicPoly& b,
                                   const Modulus& q);
// Transform product; exact (operands are split into 16-bit signed limbs).
NegacyclicPoly poly_mul(const NegacyclicPoly& a, const NegacyclicPoly& b, const Modulus& q);

// X^k * p, k taken modulo 2N.
NegacyclicPoly monomial_rotate(const NegacyclicPoly& p, std::int64_t k, const Modulus& q);
void monomial_rotate_into(const Coeff* in, Coeff* out, std::size_t n, std::int64_t k,
                          const Modulus& q);

// round(x * q2 / q1) mod q2, half away from zero on the centered representative of x.
std::uint64_t rescale(std::uint64_t x, std::uint64_t q1, std::uint64_t q2);

// Round-half-away-from-zero of num / den for den > 0.
std::int64_t div_round(std::int64_t num, std::int64_t den);

}  // namespace fdsnn
