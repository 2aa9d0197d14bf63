#include "ppgbp/dsp/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ppgbp/common/error.hpp"

namespace ppgbp::dsp {

using cplx = std::complex<double>;

void validate(const FilterSpec& spec) {
  if (!(spec.fs > 0.0)) throw ConfigError("filter: sampling rate must be positive");
  if (spec.order < 2 || spec.order % 2 != 0)
    throw ConfigError("filter: order must be even and >= 2, got " + std::to_string(spec.order));
  if (!(spec.f_low > 0.0)) throw ConfigError("filter: f_low must be > 0 Hz");
  if (!(spec.f_high > spec.f_low)) throw ConfigError("filter: f_high must exceed f_low");
  if (!(spec.f_high < spec.fs / 2.0))
    throw ConfigError("filter: f_high " + std::to_string(spec.f_high) +
                      " Hz must be below Nyquist " + std::to_string(spec.fs / 2.0) + " Hz");
}

IIRCoefficients design_bandpass(const FilterSpec& spec) {
  validate(spec);
  const int n = spec.order;
  const double fs2 = 2.0 * spec.fs;

  // pre-warped analog band edges (rad/s)
  const double w1 = fs2 * std::tan(std::numbers::pi * spec.f_low / spec.fs);
  const double w2 = fs2 * std::tan(std::numbers::pi * spec.f_high / spec.fs);
  const double w0sq = w1 * w2;
  const double bw = w2 - w1;

  // lowpass prototype poles -> bandpass poles -> z-plane, keep upper half-plane
  std::vector<cplx> upper;
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
    const cplx p = std::polar(1.0, theta);
    const cplx pb = p * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const cplx s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      const cplx z = (1.0 + s / fs2) / (1.0 - s / fs2);
      if (z.imag() > 0.0) upper.push_back(z);
    }
  }
  if (static_cast<int>(upper.size()) != n)
    throw ConfigError("filter: unexpected real pole in bandpass design");
  std::sort(upper.begin(), upper.end(),
            [](const cplx& l, const cplx& r) { return std::arg(l) < std::arg(r); });

  IIRCoefficients out;
  for (const cplx& z : upper) {
    Biquad s;
    s.b = {1.0, 0.0, -1.0};  // one zero at z = 1, one at z = -1
    s.a = {1.0, -2.0 * z.real(), std::norm(z)};
    out.sections.push_back(s);
  }

  // unit gain at the digital image of the analog center frequency
  const double f_center = std::atan(std::sqrt(w0sq) / fs2) * spec.fs / std::numbers::pi;
  const double g = std::abs(frequency_response(out, f_center, spec.fs));
  const double per_section = std::pow(1.0 / g, 1.0 / n);
  for (auto& s : out.sections)
    for (auto& b : s.b) b *= per_section;
  return out;
}

std::complex<double> frequency_response(const IIRCoefficients& coeffs, double f, double fs) {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  cplx h{1.0, 0.0};
  for (const auto& s : coeffs.sections) {
    const cplx num = s.b[0] + zinv * (s.b[1] + zinv * s.b[2]);
    const cplx den = s.a[0] + zinv * (s.a[1] + zinv * s.a[2]);
    h *= num / den;
  }
  return h;
}

std::vector<std::complex<double>> poles(const IIRCoefficients& coeffs) {
  std::vector<cplx> out;
  for (const auto& s : coeffs.sections) {
    const cplx disc = std::sqrt(cplx(s.a[1] * s.a[1] - 4.0 * s.a[2], 0.0));
    out.push_back((-s.a[1] + disc) / 2.0);
    out.push_back((-s.a[1] - disc) / 2.0);
  }
  return out;
}

namespace {

struct State {
  double z1 = 0.0;
  double z2 = 0.0;
};

void run_sections(std::vector<double>& x, const IIRCoefficients& coeffs, std::vector<State> state) {
  for (std::size_t k = 0; k < coeffs.sections.size(); ++k) {
    const auto& s = coeffs.sections[k];
    auto [z1, z2] = state[k];
    for (double& v : x) {
      const double y = s.b[0] * v + z1;
      z1 = s.b[1] * v - s.a[1] * y + z2;
      z2 = s.b[2] * v - s.a[2] * y;
      v = y;
    }
  }
}

// Per-section state that makes a constant input of value `x0` a steady state.
std::vector<State> steady_state(const IIRCoefficients& coeffs, double x0) {
  std::vector<State> out;
  double level = x0;
  for (const auto& s : coeffs.sections) {
    const double gain = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
    const double y = gain * level;
    State st;
    st.z2 = s.b[2] * level - s.a[2] * y;
    st.z1 = s.b[1] * level - s.a[1] * y + st.z2;
    out.push_back(st);
    level = y;
  }
  return out;
}

}  // namespace

std::vector<double> filter_forward(std::span<const double> signal, const IIRCoefficients& coeffs) {
  std::vector<double> x(signal.begin(), signal.end());
  run_sections(x, coeffs, std::vector<State>(coeffs.sections.size()));
  return x;
}

std::vector<double> apply_filter(std::span<const double> signal, const IIRCoefficients& coeffs) {
  const std::size_t pad = 3 * static_cast<std::size_t>(coeffs.total_order());
  const std::size_t n = signal.size();
  if (n <= pad)
    throw RejectionError("filter: signal of " + std::to_string(n) + " samples is too short for " +
                         std::to_string(pad) + " samples of edge padding");

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

  run_sections(ext, coeffs, steady_state(coeffs, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_sections(ext, coeffs, steady_state(coeffs, ext.front()));
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace ppgbp::dsp
