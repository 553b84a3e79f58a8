#pragma once

#include "fdsnn/ring.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <new>
#include <vector>

namespace fdsnn {

template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Cplx = std::complex<double>;
using Spectrum = std::vector<Cplx, AlignedAllocator<Cplx>>;

// Negacyclic transform of length N realized as an N/2-point complex FFT:
// u_j = (c_j + i c_{j+N/2}) * zeta^j, zeta = exp(i pi / N), evaluated at zeta^(4k+1).
// Pointwise products of spectra correspond to products in Z[X]/(X^N + 1).
class NegacyclicFft {
 public:
  explicit NegacyclicFft(std::size_t n);
  ~NegacyclicFft();
  NegacyclicFft(const NegacyclicFft&) = delete;
  NegacyclicFft& operator=(const NegacyclicFft&) = delete;

  std::size_t degree() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2; }

  void forward(const std::int64_t* coeffs, Cplx* out) const;
  void forward(const std::int32_t* coeffs, Cplx* out) const;
  // Inverse transform rounded to the nearest integers.
  void inverse(const Cplx* spec, std::int64_t* out) const;

  // Shared, lazily constructed engine per degree; safe to call from any thread.
  static const NegacyclicFft& instance(std::size_t n);

 private:
  template <class T>
  void forward_impl(const T* coeffs, Cplx* out) const;

  std::size_t n_;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
  std::vector<Cplx> twist_;
  std::vector<Cplx> inv_twist_;  // conj(twist) / (N/2)
};

// Splits residues into centered 16-bit limbs: centered(x) = lo + hi * 2^16, lo in [-2^15, 2^15).
void split_limbs(const Coeff* in, std::size_t n, const Modulus& q, std::int64_t* lo,
                 std::int64_t* hi);

inline void spectrum_mul_add(Cplx* acc, const Cplx* a, const Cplx* b, std::size_t m) {
  auto* __restrict r = reinterpret_cast<double*>(acc);
  const auto* __restrict x = reinterpret_cast<const double*>(a);
  const auto* __restrict y = reinterpret_cast<const double*>(b);
  for (std::size_t k = 0; k < 2 * m; k += 2) {
    r[k] += x[k] * y[k] - x[k + 1] * y[k + 1];
    r[k + 1] += x[k] * y[k + 1] + x[k + 1] * y[k];
  }
}

}  // namespace fdsnn
