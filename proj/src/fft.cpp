#include "micdist/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace micdist {

namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const { fftw_destroy_plan(plan); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created FFTW_UNALIGNED so any std::vector buffer can be used.
fftw_plan plan_for(int n) {
  static std::mutex mutex;
  static std::map<int, Plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second.get();

  double* in = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan =
      fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, Plan(plan));
  return plan;
}

}  // namespace

std::vector<std::complex<double>> real_dft(std::span<const double> frame) {
  const int n = static_cast<int>(frame.size());
  if (n == 0) return {};
  std::vector<double> in(frame.begin(), frame.end());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_execute_dft_r2c(plan_for(n), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace micdist
