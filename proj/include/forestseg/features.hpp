#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forestseg/spatial_index.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

/// Eigenvalue shape descriptors of one neighborhood. With eigenvalues
/// lambda1 >= lambda2 >= lambda3 >= 0 of the neighborhood covariance and
/// normalized eigenvalues e_i = lambda_i / sum:
///   linearity        (l1 - l2) / l1
///   planarity        (l2 - l3) / l1
///   sphericity       l3 / l1
///   verticality      1 - |n_z|, n = unit eigenvector of l3; for near-linear
///                    neighborhoods (planarity < 0.01 and linearity > 0.9)
///                    it is |d_z| of the l1 eigenvector instead, so a
///                    vertical line is maximally vertical
///   eigenentropy     -sum e_i ln e_i   (0 ln 0 := 0)
///   surface_variation l3 / (l1 + l2 + l3)
///   anisotropy       (l1 - l3) / l1
///   omnivariance     (l1 * l2 * l3)^(1/3)
///   eigenvalue_sum   l1 + l2 + l3
///   second_eigenvalue l2
///   pca1, pca2       e1, e2
///   curvature        alias of surface_variation
/// Covariance uses the population (1/N) denominator; eigenvalues are
/// clamped at 0 to absorb numerical negatives.
struct GeometricFeatureVector {
  double linearity = 0.0;
  double planarity = 0.0;
  double sphericity = 0.0;
  double verticality = 0.0;
  double eigenentropy = 0.0;
  double surface_variation = 0.0;
  double anisotropy = 0.0;
  double omnivariance = 0.0;
  double eigenvalue_sum = 0.0;
  double second_eigenvalue = 0.0;
  double pca1 = 0.0;
  double pca2 = 0.0;
  double curvature = 0.0;
  int neighbor_count = 0;
  bool degenerate = false;
};

inline constexpr std::size_t kGeometricFeatureCount = 15;

/// Column names of the geometric block, in table order.
std::span<const char* const> geometric_feature_names();

/// Descriptors for a neighborhood of >= 3 points (throws below that; the
/// table builder owns the sparse-neighborhood fallback). All points
/// coincident => degenerate flag set and ratio features 0.
GeometricFeatureVector eigen_features(std::span<const Point3> neighborhood);

/// Feature-vector scenario: which column blocks go into the table.
struct FeatureMask {
  bool coordinates = false;  // centered X, Y + normalized height
  bool swir = false;
  bool nir = false;
  bool green = false;
  bool vi = false;        // ndvi_nir_swir on linear reflectance
  bool geometric = false; // eigenvalue block at the neighborhood radius

  bool any_spectral() const { return swir || nir || green; }
  bool operator==(const FeatureMask&) const = default;
};

struct FeatureScenario {
  std::string name;
  FeatureMask mask;
};

/// The nine spectral ablation scenarios, in canonical row order
/// (coordinates only, single channels, channel pairs, all three, all three
/// plus the vegetation index). None of them include the geometric block.
const std::vector<FeatureScenario>& ablation_scenarios();

/// Everything: coordinates + all channels + VI + geometric block. The
/// default classifier feature vector.
FeatureMask full_mask();

/// Accepts scenario row names ("+SWIR + NIR"), compact forms
/// ("swir+nir"), "coordinates", or "full"; case-insensitive.
FeatureScenario scenario_from_name(const std::string& name);

/// Per-point feature matrix aligned with a cloud.
struct FeatureTable {
  std::vector<std::string> columns;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major, rows x columns.size()

  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols(), cols()};
  }
};

/// Assembles the table for a cloud: coordinate block (centered X/Y and
/// normalized height, each robust+min-max scaled), spectral block (scaled
/// per-channel reflectance), VI block (ndvi_nir_swir from linear
/// reflectance, scaled), then the geometric block at radius_m. The
/// neighborhood includes the point itself; neighborhoods with fewer than 3
/// points get a fallback row (geometric features 0, degenerate flag set).
/// Requires z_normalized when the mask includes coordinates.
FeatureTable compute_feature_table(const MultispectralCloud& cloud,
                                   const FeatureMask& mask, double radius_m = 1.0);

/// Headered text dump (column-name line then one row per point).
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);

/// Ground-truth labels of a fully labeled cloud; throws naming the first
/// unlabeled index otherwise.
std::vector<SemanticClass> extract_labels(const MultispectralCloud& cloud);

}  // namespace forestseg
