#include "fdsnn/fft.hpp"

#include "fdsnn/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace fdsnn {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

Spectrum& scratch(std::size_t m) {
  thread_local Spectrum buf;
  if (buf.size() < m) buf.resize(m);
  return buf;
}

}  // namespace

NegacyclicFft::NegacyclicFft(std::size_t n) : n_(n) {
  if (!is_power_of_two(n) || n < 2)
    throw ParameterError("transform degree must be a power of two >= 2");
  const std::size_t m = n / 2;
  twist_.resize(m);
  for (std::size_t j = 0; j < m; ++j)
    twist_[j] = std::polar(1.0, std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
  inv_twist_.resize(m);
  for (std::size_t j = 0; j < m; ++j) inv_twist_[j] = std::conj(twist_[j]) / static_cast<double>(m);

  Spectrum probe(m);
  auto* p = reinterpret_cast<fftw_complex*>(probe.data());
  std::lock_guard<std::mutex> lock(plan_mutex());
  plan_fwd_ = fftw_plan_dft_1d(static_cast<int>(m), p, p, FFTW_BACKWARD, FFTW_MEASURE);
  plan_inv_ = fftw_plan_dft_1d(static_cast<int>(m), p, p, FFTW_FORWARD, FFTW_MEASURE);
  if (!plan_fwd_ || !plan_inv_) throw Error("FFTW planning failed");
}

NegacyclicFft::~NegacyclicFft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

template <class T>
void NegacyclicFft::forward_impl(const T* c, Cplx* out) const {
  const std::size_t m = n_ / 2;
  auto* o = reinterpret_cast<double*>(out);
  const auto* w = reinterpret_cast<const double*>(twist_.data());
  for (std::size_t j = 0; j < m; ++j) {
    const double re = static_cast<double>(c[j]), im = static_cast<double>(c[j + m]);
    o[2 * j] = re * w[2 * j] - im * w[2 * j + 1];
    o[2 * j + 1] = re * w[2 * j + 1] + im * w[2 * j];
  }
  auto* p = reinterpret_cast<fftw_complex*>(out);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), p, p);
}

void NegacyclicFft::forward(const std::int64_t* c, Cplx* out) const { forward_impl(c, out); }
void NegacyclicFft::forward(const std::int32_t* c, Cplx* out) const { forward_impl(c, out); }

void NegacyclicFft::inverse(const Cplx* spec, std::int64_t* out) const {
  const std::size_t m = n_ / 2;
  Spectrum& buf = scratch(m);
  std::copy(spec, spec + m, buf.begin());
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(static_cast<fftw_plan>(plan_inv_), p, p);
  const auto* b = reinterpret_cast<const double*>(buf.data());
  const auto* w = reinterpret_cast<const double*>(inv_twist_.data());
  for (std::size_t j = 0; j < m; ++j) {
    const double re = b[2 * j] * w[2 * j] - b[2 * j + 1] * w[2 * j + 1];
    const double im = b[2 * j] * w[2 * j + 1] + b[2 * j + 1] * w[2 * j];
    out[j] = static_cast<std::int64_t>(std::nearbyint(re));
    out[j + m] = static_cast<std::int64_t>(std::nearbyint(im));
  }
}

const NegacyclicFft& NegacyclicFft::instance(std::size_t n) {
  thread_local const NegacyclicFft* last = nullptr;
  if (last && last->n_ == n) return *last;
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<NegacyclicFft>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<NegacyclicFft>(n);
  last = slot.get();
  return *slot;
}

void split_limbs(const Coeff* in, std::size_t n, const Modulus& q, std::int64_t* lo,
                 std::int64_t* hi) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t c = q.centered(in[i]);
    const std::int64_t l = static_cast<std::int16_t>(static_cast<std::uint16_t>(c & 0xFFFF));
    lo[i] = l;
    hi[i] = (c - l) >> 16;
  }
}

}  // namespace fdsnn
