#pragma once

#include <vector>

#include "mtlab/core.hpp"

namespace mtlab {

// In-place complex DFT of fixed shape (1 or 2 dimensions) backed by FFTW.
// sign = -1 computes sum_j a_j e^{-2 pi i jk/L}; sign = +1 uses e^{+2 pi i jk/L}.
// No normalisation is applied in either direction.
class FftPlan {
 public:
  FftPlan(std::vector<int> dims, int sign);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& o) noexcept;
  FftPlan& operator=(FftPlan&&) = delete;

  std::size_t size() const { return size_; }
  cd* data() { return buf_; }
  void execute();

 private:
  std::vector<int> dims_;
  std::size_t size_ = 0;
  cd* buf_ = nullptr;
  void* plan_ = nullptr;
};

}  // namespace mtlab
