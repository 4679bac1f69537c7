#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace stutterkit {

/// Real-input forward DFT of a fixed length (any size, not only powers of
/// two). Backed by FFTW; execute() is safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const noexcept { return n_; }
  int bins() const noexcept { return n_ / 2 + 1; }

  /// X[k] for k in [0, n/2].
  std::vector<std::complex<double>> forward(std::span<const double> frame) const;

  /// |X[k]|^2 written to out (size bins()).
  void power(std::span<const double> frame, std::span<double> out) const;

 private:
  struct Plan;
  int n_;
  std::unique_ptr<Plan> plan_;
};

}  // namespace stutterkit
