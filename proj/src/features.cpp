#include "forestseg/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "forestseg/error.hpp"
#include "forestseg/preprocess.hpp"
#include "forestseg/spectral.hpp"

namespace forestseg {
namespace {

constexpr const char* kGeometricNames[kGeometricFeatureCount] = {
    "linearity",      "planarity",         "sphericity",     "verticality",
    "eigenentropy",   "surface_variation", "anisotropy",     "omnivariance",
    "eigenvalue_sum", "second_eigenvalue", "pca1",           "pca2",
    "curvature",      "neighbor_count",    "degenerate_flag"};

void append_geometric(std::vector<std::string>& cols) {
  for (const char* name : kGeometricNames) cols.emplace_back(name);
}

std::string normalize_scenario_key(const std::string& name) {
  std::string key;
  for (char ch : name) {
    if (ch == ' ' || ch == '\t') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  while (!key.empty() && key.front() == '+') key.erase(key.begin());
  return key;
}

}  // namespace

std::span<const char* const> geometric_feature_names() {
  return {kGeometricNames, kGeometricFeatureCount};
}

GeometricFeatureVector eigen_features(std::span<const Point3> neighborhood) {
  const std::size_t n = neighborhood.size();
  if (n < 3) {
    throw ValidationError("eigen_features requires at least 3 points, got " +
                          std::to_string(n));
  }

  double cx = 0.0, cy = 0.0, cz = 0.0;
  for (const auto& p : neighborhood) {
    cx += p[0];
    cy += p[1];
    cz += p[2];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  cx *= inv_n;
  cy *= inv_n;
  cz *= inv_n;

  double xx = 0.0, xy = 0.0, xz = 0.0, yy = 0.0, yz = 0.0, zz = 0.0;
  for (const auto& p : neighborhood) {
    const double dx = p[0] - cx;
    const double dy = p[1] - cy;
    const double dz = p[2] - cz;
    xx += dx * dx;
    xy += dx * dy;
    xz += dx * dz;
    yy += dy * dy;
    yz += dy * dz;
    zz += dz * dz;
  }
  Eigen::Matrix3d cov;
  cov << xx, xy, xz, xy, yy, yz, xz, yz, zz;
  cov *= inv_n;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // Ascending order from Eigen; l1 is the largest.
  const double l3 = std::max(solver.eigenvalues()(0), 0.0);
  const double l2 = std::max(solver.eigenvalues()(1), 0.0);
  const double l1 = std::max(solver.eigenvalues()(2), 0.0);

  GeometricFeatureVector f;
  f.neighbor_count = static_cast<int>(n);
  f.eigenvalue_sum = l1 + l2 + l3;
  f.second_eigenvalue = l2;

  if (!(l1 > 0.0)) {
    f.degenerate = true;
    return f;
  }

  f.linearity = (l1 - l2) / l1;
  f.planarity = (l2 - l3) / l1;
  f.sphericity = l3 / l1;
  f.anisotropy = (l1 - l3) / l1;
  f.omnivariance = std::cbrt(l1 * l2 * l3);
  const double sum = f.eigenvalue_sum;
  f.surface_variation = l3 / sum;
  f.curvature = f.surface_variation;

  double entropy = 0.0;
  for (double l : {l1, l2, l3}) {
    const double e = l / sum;
    if (e > 0.0) entropy -= e * std::log(e);
  }
  f.eigenentropy = entropy;
  f.pca1 = l1 / sum;
  f.pca2 = l2 / sum;

  if (f.planarity < 0.01 && f.linearity > 0.9) {
    // Near-linear neighborhood: the surface normal is ill-defined, so rate
    // verticality by the principal direction instead.
    const Eigen::Vector3d dir = solver.eigenvectors().col(2).normalized();
    f.verticality = std::min(std::abs(dir.z()), 1.0);
  } else {
    const Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
    f.verticality = 1.0 - std::min(std::abs(normal.z()), 1.0);
  }
  return f;
}

const std::vector<FeatureScenario>& ablation_scenarios() {
  static const std::vector<FeatureScenario> scenarios = [] {
    auto mask = [](bool s, bool n, bool g, bool v) {
      FeatureMask m;
      m.coordinates = true;
      m.swir = s;
      m.nir = n;
      m.green = g;
      m.vi = v;
      return m;
    };
    return std::vector<FeatureScenario>{
        {"Coordinates", mask(false, false, false, false)},
        {"+SWIR", mask(true, false, false, false)},
        {"+NIR", mask(false, true, false, false)},
        {"+Green", mask(false, false, true, false)},
        {"+SWIR + NIR", mask(true, true, false, false)},
        {"+SWIR + Green", mask(true, false, true, false)},
        {"+NIR + Green", mask(false, true, true, false)},
        {"+SWIR + NIR + Green", mask(true, true, true, false)},
        {"+SWIR + NIR + Green + VI", mask(true, true, true, true)},
    };
  }();
  return scenarios;
}

FeatureMask full_mask() {
  FeatureMask m;
  m.coordinates = m.swir = m.nir = m.green = m.vi = m.geometric = true;
  return m;
}

FeatureScenario scenario_from_name(const std::string& name) {
  const std::string key = normalize_scenario_key(name);
  if (key == "full") return {"full", full_mask()};
  for (const auto& s : ablation_scenarios()) {
    if (normalize_scenario_key(s.name) == key) return s;
  }
  throw ValidationError("unknown feature scenario: '" + name + "'");
}

FeatureTable compute_feature_table(const MultispectralCloud& cloud,
                                   const FeatureMask& mask, double radius_m) {
  if (cloud.points.empty()) throw ValidationError("compute_feature_table on empty cloud");
  if (!(radius_m > 0.0)) throw ValidationError("feature radius must be > 0");
  if (!(mask.coordinates || mask.any_spectral() || mask.vi || mask.geometric)) {
    throw ValidationError("feature mask selects no columns");
  }
  const std::size_t n = cloud.points.size();
  if (mask.coordinates) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!cloud.points[i].z_normalized) {
        throw ValidationError(
            "feature mask includes coordinates but z_normalized is missing "
            "(run normalize_height first); first offending index " +
            std::to_string(i));
      }
    }
  }

  FeatureTable table;
  table.rows = n;
  if (mask.coordinates) {
    table.columns.emplace_back("x");
    table.columns.emplace_back("y");
    table.columns.emplace_back("z_norm");
  }
  if (mask.swir) table.columns.emplace_back("r_swir");
  if (mask.nir) table.columns.emplace_back("r_nir");
  if (mask.green) table.columns.emplace_back("r_green");
  if (mask.vi) table.columns.emplace_back("ndvi_nir_swir");
  if (mask.geometric) append_geometric(table.columns);

  const std::size_t ncols = table.columns.size();
  table.values.assign(n * ncols, 0.0);

  auto store_column = [&](std::size_t col, const std::vector<double>& scaled) {
    for (std::size_t i = 0; i < n; ++i) table.values[i * ncols + col] = scaled[i];
  };

  std::size_t col = 0;
  std::vector<double> tmp(n);
  if (mask.coordinates) {
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& p : cloud.points) {
      mean_x += p.x;
      mean_y += p.y;
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) tmp[i] = cloud.points[i].x - mean_x;
    store_column(col++, robust_minmax_scale(tmp));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = cloud.points[i].y - mean_y;
    store_column(col++, robust_minmax_scale(tmp));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = *cloud.points[i].z_normalized;
    store_column(col++, robust_minmax_scale(tmp));
  }
  for (Channel c : kAllChannels) {
    const bool included = (c == Channel::Swir && mask.swir) ||
                          (c == Channel::Nir && mask.nir) ||
                          (c == Channel::Green && mask.green);
    if (!included) continue;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = cloud.points[i].reflectance(c);
    store_column(col++, robust_minmax_scale(tmp));
  }
  if (mask.vi) {
    store_column(col++, robust_minmax_scale(compute_vegetation_index(
                            cloud, VegetationIndexKind::NdviNirSwir)));
  }

  if (mask.geometric) {
    const std::size_t geo_base = col;
    const SpatialIndex index = SpatialIndex::build(cloud);
#pragma omp parallel
    {
      std::vector<std::size_t> nbr;
      std::vector<Point3> coords;
#pragma omp for schedule(dynamic, 256)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        nbr.clear();
        index.radius_query(index.point(i), radius_m, nbr);
        double* row = table.values.data() + static_cast<std::size_t>(i) * ncols + geo_base;
        if (nbr.size() < 3) {
          // Sparse-neighborhood fallback: zeros with the flag set.
          row[13] = static_cast<double>(nbr.size());
          row[14] = 1.0;
          continue;
        }
        coords.clear();
        coords.reserve(nbr.size());
        for (std::size_t j : nbr) coords.push_back(index.point(j));
        const GeometricFeatureVector f = eigen_features(coords);
        row[0] = f.linearity;
        row[1] = f.planarity;
        row[2] = f.sphericity;
        row[3] = f.verticality;
        row[4] = f.eigenentropy;
        row[5] = f.surface_variation;
        row[6] = f.anisotropy;
        row[7] = f.omnivariance;
        row[8] = f.eigenvalue_sum;
        row[9] = f.second_eigenvalue;
        row[10] = f.pca1;
        row[11] = f.pca2;
        row[12] = f.curvature;
        row[13] = static_cast<double>(f.neighbor_count);
        row[14] = f.degenerate ? 1.0 : 0.0;
      }
    }
  }
  return table;
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
  for (std::size_t c = 0; c < table.cols(); ++c) {
    std::fprintf(f, c == 0 ? "%s" : " %s", table.columns[c].c_str());
  }
  std::fputc('\n', f);
  for (std::size_t r = 0; r < table.rows; ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      std::fprintf(f, c == 0 ? "%.9g" : " %.9g", table.at(r, c));
    }
    std::fputc('\n', f);
  }
  const bool bad = std::ferror(f) || std::fflush(f) != 0;
  std::fclose(f);
  if (bad) throw IoError("write failed for " + path.string());
}

std::vector<SemanticClass> extract_labels(const MultispectralCloud& cloud) {
  std::vector<SemanticClass> labels;
  labels.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& lbl = cloud.points[i].label;
    if (!lbl) throw ValidationError("unlabeled point at index " + std::to_string(i));
    labels.push_back(*lbl);
  }
  return labels;
}

}  // namespace forestseg
