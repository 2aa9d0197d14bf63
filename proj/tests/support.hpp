#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ppgbp/common/random.hpp"
#include "ppgbp/data/types.hpp"

namespace ppgbp::test {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ppgbp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Window sample with a constant-free random PPG.
inline data::WindowSample make_sample(std::uint32_t subject, std::uint32_t index, double sbp,
                                      std::size_t n_samp = 625, std::uint64_t seed = 1) {
  data::WindowSample s;
  s.subject_id = subject;
  s.window_index = index;
  s.sbp = static_cast<float>(sbp);
  s.hr = 70.0f;
  s.snr = 3.0f;
  Rng rng(mix_seed(seed, subject, index));
  s.ppg.resize(n_samp);
  for (auto& v : s.ppg) v = static_cast<float>(rng.normal());
  return s;
}

inline std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs + phase);
  return x;
}

}  // namespace ppgbp::test
