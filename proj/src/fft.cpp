#include "mtlab/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace mtlab {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(std::vector<int> dims, int sign) : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > 2) throw ArgumentError("FFT rank must be 1 or 2");
  size_ = 1;
  for (int d : dims_) {
    if (d <= 0) throw ArgumentError("FFT length must be positive");
    size_ *= static_cast<std::size_t>(d);
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  buf_ = reinterpret_cast<cd*>(fftw_malloc(sizeof(fftw_complex) * size_));
  if (!buf_) throw BudgetError("FFT buffer allocation failed", sizeof(fftw_complex) * size_);
  auto* b = reinterpret_cast<fftw_complex*>(buf_);
  int s = sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD;
  plan_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), b, b, s, FFTW_ESTIMATE);
}

FftPlan::FftPlan(FftPlan&& o) noexcept : dims_(std::move(o.dims_)), size_(o.size_), buf_(o.buf_), plan_(o.plan_) {
  o.buf_ = nullptr;
  o.plan_ = nullptr;
}

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  if (buf_) fftw_free(buf_);
}

void FftPlan::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

}  // namespace mtlab
