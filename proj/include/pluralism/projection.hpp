#pragma once

// Deterministic 2-D linear projection (PCA) of row vectors, plus a
// pass-through for externally computed coordinates keyed by case_id.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

// <resolv.h> (pulled in by the HTTP client) defines _res, an Eigen parameter name.
#pragma push_macro("_res")
#undef _res
#include <Eigen/Dense>
#pragma pop_macro("_res")

#include "pluralism/csv.hpp"
#include "pluralism/error.hpp"
#include "pluralism/matrix.hpp"
#include "pluralism/text.hpp"

namespace pluralism {

inline constexpr double kDegenerateVariance = 1e-12;

struct Projection {
  Matrix coords;                     // n x 2
  std::array<double, 2> variance{};  // sample variance along each component
  double total_variance = 0.0;
  double explained_share = 0.0;      // (variance[0] + variance[1]) / total_variance
  std::vector<std::vector<double>> components;  // 2 unit loading vectors
};

/// Mean-centered PCA onto the top two eigenvectors of the sample covariance.
/// Each component is sign-fixed so its largest-magnitude loading is
/// positive. When d > n the n x n Gram matrix is decomposed instead.
inline Projection project_2d(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 3) throw ContractError("project_2d: need at least 3 rows");
  Eigen::MatrixXd c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(x(i, j))) throw DataError("project_2d: non-finite entry");
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j);
    }
  }
  c.rowwise() -= c.colwise().mean();
  const double denom = static_cast<double>(n - 1);

  Projection out;
  std::size_t varying = 0;
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const double v = c.col(j).squaredNorm() / denom;
    out.total_variance += v;
    if (v > kDegenerateVariance) ++varying;
  }
  if (varying < 2) throw DataError("project_2d: fewer than 2 non-degenerate dimensions");

  Eigen::MatrixXd loadings(static_cast<Eigen::Index>(d), 2);
  if (d <= n) {
    const Eigen::MatrixXd cov = (c.transpose() * c) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::Index last = static_cast<Eigen::Index>(d) - 1;
    for (int k = 0; k < 2; ++k) {
      out.variance[static_cast<std::size_t>(k)] = std::max(0.0, eig.eigenvalues()(last - k));
      loadings.col(k) = eig.eigenvectors().col(last - k);
    }
  } else {
    const Eigen::MatrixXd gram = (c * c.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::Index last = static_cast<Eigen::Index>(n) - 1;
    for (int k = 0; k < 2; ++k) {
      const double lambda = std::max(0.0, eig.eigenvalues()(last - k));
      out.variance[static_cast<std::size_t>(k)] = lambda;
      Eigen::VectorXd v = c.transpose() * eig.eigenvectors().col(last - k);
      const double norm = v.norm();
      loadings.col(k) = norm > 0.0 && lambda > kDegenerateVariance ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Zero(c.cols());
    }
  }

  for (int k = 0; k < 2; ++k) {
    Eigen::Index arg = 0;
    loadings.col(k).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, k) < 0.0) loadings.col(k) = -loadings.col(k);
    out.components.emplace_back(loadings.col(k).data(), loadings.col(k).data() + d);
  }
  const Eigen::MatrixXd scores = c * loadings;
  out.coords = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    out.coords(i, 0) = scores(static_cast<Eigen::Index>(i), 0);
    out.coords(i, 1) = scores(static_cast<Eigen::Index>(i), 1);
  }
  out.explained_share = out.total_variance > 0.0 ? (out.variance[0] + out.variance[1]) / out.total_variance : 0.0;
  return out;
}

using ExternalCoordinates = std::map<std::string, std::array<double, 2>>;

/// Reads a CSV with header case_id,x,y.
inline ExternalCoordinates load_external_coordinates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open coordinates file: " + path.string());
  const auto table = csv::parse(in);
  if (table.records.empty() || table.records[0] != std::vector<std::string>{"case_id", "x", "y"}) {
    throw DataError("coordinates file: header must be case_id,x,y");
  }
  ExternalCoordinates coords;
  for (std::size_t r = 1; r < table.records.size(); ++r) {
    const auto& rec = table.records[r];
    const auto x = rec.size() == 3 ? text::parse_double(rec[1]) : std::nullopt;
    const auto y = rec.size() == 3 ? text::parse_double(rec[2]) : std::nullopt;
    if (!x || !y) throw DataError("coordinates file: bad row " + std::to_string(table.start_lines[r]));
    coords[rec[0]] = {*x, *y};
  }
  return coords;
}

/// Looks up every id; a missing id is an error.
inline Matrix external_projection(const std::vector<std::string>& case_ids, const ExternalCoordinates& coords) {
  Matrix out(case_ids.size(), 2);
  for (std::size_t i = 0; i < case_ids.size(); ++i) {
    const auto it = coords.find(case_ids[i]);
    if (it == coords.end()) throw DataError("coordinates file has no entry for case_id '" + case_ids[i] + "'");
    out(i, 0) = it->second[0];
    out(i, 1) = it->second[1];
  }
  return out;
}

}  // namespace pluralism
