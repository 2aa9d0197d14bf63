#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace ppgbp::dsp {

/// Butterworth bandpass request. `order` is the order of the lowpass prototype;
/// the resulting bandpass has 2 * order poles realized as `order` biquads.
struct FilterSpec {
  int order = 4;
  double f_low = 0.5;   // Hz
  double f_high = 8.0;  // Hz
  double fs = 125.0;    // Hz
};

/// One second-order section, H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

struct IIRCoefficients {
  std::vector<Biquad> sections;

  /// Sum of section orders (2 per biquad).
  int total_order() const { return static_cast<int>(sections.size()) * 2; }
};

/// Checks 0 < f_low < f_high < fs/2 and an even order >= 2. Throws ConfigError.
void validate(const FilterSpec& spec);

/// Analog prototype + bilinear transform with pre-warped band edges.
IIRCoefficients design_bandpass(const FilterSpec& spec);

/// H(e^{j 2 pi f / fs}) evaluated from the section polynomials.
std::complex<double> frequency_response(const IIRCoefficients& coeffs, double f, double fs);

/// Roots of each section's denominator; all must lie strictly inside |z| = 1.
std::vector<std::complex<double>> poles(const IIRCoefficients& coeffs);

/// Causal single pass (transposed direct form II, zero initial state).
std::vector<double> filter_forward(std::span<const double> signal, const IIRCoefficients& coeffs);

/// Zero-phase forward-backward filtering with odd-reflection edge padding of
/// 3 * total_order samples and steady-state initial conditions.
/// Throws RejectionError when the signal is not longer than the padding.
std::vector<double> apply_filter(std::span<const double> signal, const IIRCoefficients& coeffs);

}  // namespace ppgbp::dsp
