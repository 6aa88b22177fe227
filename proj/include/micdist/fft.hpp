#pragma once

#include <complex>
#include <span>
#include <vector>

namespace micdist {

// Forward DFT of a real frame, X_k = sum_n x_n exp(-2 pi i k n / N), for
// k = 0..N/2. Unnormalized. Backed by FFTW; plans are cached per length and
// shared between threads.
std::vector<std::complex<double>> real_dft(std::span<const double> frame);

}  // namespace micdist
