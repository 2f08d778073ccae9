#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "forestseg/stats.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

enum class VegetationIndexKind {
  NdviNirGreen = 0,
  NdviNirSwir = 1,
  Cvi = 2,
  Grvi = 3,
  Gdvi = 4,
};

inline constexpr std::array<VegetationIndexKind, 5> kAllVegetationIndices = {
    VegetationIndexKind::NdviNirGreen, VegetationIndexKind::NdviNirSwir,
    VegetationIndexKind::Cvi, VegetationIndexKind::Grvi, VegetationIndexKind::Gdvi};

inline constexpr const char* vi_name(VegetationIndexKind k) {
  switch (k) {
    case VegetationIndexKind::NdviNirGreen: return "ndvi_nir_green";
    case VegetationIndexKind::NdviNirSwir: return "ndvi_nir_swir";
    case VegetationIndexKind::Cvi: return "cvi";
    case VegetationIndexKind::Grvi: return "grvi";
    case VegetationIndexKind::Gdvi: return "gdvi";
  }
  return "?";
}

VegetationIndexKind vi_from_name(const std::string& name);

/// 10^(dB / 10). Strictly positive, monotone; throws on non-finite input.
double db_to_linear(double reflectance_db);

/// Index formulas over LINEAR reflectance (callers convert from dB first):
///   ndvi_nir_green = (NIR - G) / (NIR + G)
///   ndvi_nir_swir  = (NIR - SWIR) / (NIR + SWIR)
///   cvi            = NIR * G / SWIR^2
///   grvi           = NIR / G
///   gdvi           = NIR - G
/// All inputs must be > 0.
double vegetation_index(VegetationIndexKind kind, double swir_lin, double nir_lin,
                        double green_lin);

/// Per-point index values for a whole cloud (dB converted internally).
std::vector<double> compute_vegetation_index(const MultispectralCloud& cloud,
                                             VegetationIndexKind kind);

struct SeparabilityReport {
  VegetationIndexKind kind = VegetationIndexKind::NdviNirSwir;
  std::map<SemanticClass, QuartileSummary> per_class_stats;
  double score = 0.0;  // >= 0; higher separates better
};

/// Median-gap over pooled-IQR separability of one index across the labeled
/// classes of a cloud: score = mean over class pairs of
/// |median_i - median_j| / ((IQR_i + IQR_j)/2 + 1e-12).
/// Requires >= 2 classes present, each with >= 10 points.
SeparabilityReport vi_separability(const MultispectralCloud& cloud,
                                   VegetationIndexKind kind);

/// One row per class (q25 / median / q75) plus a summary score line.
std::string to_text(const SeparabilityReport& report);

}  // namespace forestseg
