#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "pluralism/case_model.hpp"
#include "pluralism/rng.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(PLURALISM_FIXTURES) / name;
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pluralism_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random point on the 2-simplex; about one in five has an exact zero.
inline pluralism::PriorSimplex random_simplex(pluralism::Rng& rng) {
  std::array<double, 3> v{rng.uniform(), rng.uniform(), rng.uniform()};
  if (rng.uniform() < 0.2) v[rng.below(3)] = 0.0;
  double s = v[0] + v[1] + v[2];
  if (s == 0.0) {
    v[0] = 1.0;
    s = 1.0;
  }
  return pluralism::PriorSimplex::from_scores(v[0] / s, v[1] / s, v[2] / s, 1e-9);
}

inline std::vector<double> random_distribution(pluralism::Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  double s = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

}  // namespace testsupport
