#include "stutterkit/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "stutterkit/error.hpp"

namespace stutterkit {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Plan {
  fftw_plan handle = nullptr;
};

RealFft::RealFft(int n) : n_(n), plan_(std::make_unique<Plan>()) {
  if (n < 2) throw Error(Errc::invalid_argument, "FFT size must be at least 2");
  std::vector<double> in(static_cast<std::size_t>(n));
  std::vector<fftw_complex> out(static_cast<std::size_t>(bins()));
  std::lock_guard lock(planner_mutex());
  plan_->handle = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_->handle) throw Error(Errc::invalid_argument, "FFTW could not plan size " + std::to_string(n));
}

RealFft::~RealFft() {
  if (plan_ && plan_->handle) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_->handle);
  }
}

RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    if (plan_ && plan_->handle) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_->handle);
    }
    n_ = other.n_;
    plan_ = std::move(other.plan_);
  }
  return *this;
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> frame) const {
  if (frame.size() != static_cast<std::size_t>(n_)) {
    throw Error(Errc::shape_mismatch, "frame length " + std::to_string(frame.size()) + " != FFT size " +
                                          std::to_string(n_));
  }
  std::vector<double> in(frame.begin(), frame.end());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(bins()));
  fftw_execute_dft_r2c(plan_->handle, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

void RealFft::power(std::span<const double> frame, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(bins())) {
    throw Error(Errc::shape_mismatch, "power spectrum buffer has wrong size");
  }
  const auto spectrum = forward(frame);
  for (std::size_t k = 0; k < spectrum.size(); ++k) out[k] = std::norm(spectrum[k]);
}

}  // namespace stutterkit
