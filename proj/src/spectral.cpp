#include "forestseg/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "forestseg/error.hpp"

namespace forestseg {

VegetationIndexKind vi_from_name(const std::string& name) {
  for (VegetationIndexKind k : kAllVegetationIndices) {
    if (name == vi_name(k)) return k;
  }
  throw ValidationError("unknown vegetation index: '" + name + "'");
}

double db_to_linear(double reflectance_db) {
  if (!std::isfinite(reflectance_db)) {
    throw ValidationError("db_to_linear: non-finite input");
  }
  return std::pow(10.0, reflectance_db / 10.0);
}

double vegetation_index(VegetationIndexKind kind, double swir_lin, double nir_lin,
                        double green_lin) {
  if (!(swir_lin > 0.0) || !(nir_lin > 0.0) || !(green_lin > 0.0)) {
    throw ValidationError("vegetation_index: inputs must be positive linear reflectance");
  }
  switch (kind) {
    case VegetationIndexKind::NdviNirGreen:
      return (nir_lin - green_lin) / (nir_lin + green_lin);
    case VegetationIndexKind::NdviNirSwir:
      return (nir_lin - swir_lin) / (nir_lin + swir_lin);
    case VegetationIndexKind::Cvi:
      return nir_lin * green_lin / (swir_lin * swir_lin);
    case VegetationIndexKind::Grvi:
      return nir_lin / green_lin;
    case VegetationIndexKind::Gdvi:
      return nir_lin - green_lin;
  }
  throw ValidationError("vegetation_index: unknown kind");
}

std::vector<double> compute_vegetation_index(const MultispectralCloud& cloud,
                                             VegetationIndexKind kind) {
  std::vector<double> out(cloud.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cloud.points.size()); ++i) {
    const auto& p = cloud.points[i];
    out[i] = vegetation_index(kind, db_to_linear(p.reflectance(Channel::Swir)),
                              db_to_linear(p.reflectance(Channel::Nir)),
                              db_to_linear(p.reflectance(Channel::Green)));
  }
  return out;
}

SeparabilityReport vi_separability(const MultispectralCloud& cloud,
                                   VegetationIndexKind kind) {
  const auto values = compute_vegetation_index(cloud, kind);

  std::array<std::vector<double>, kNumClasses> per_class;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& lbl = cloud.points[i].label;
    if (!lbl) throw ValidationError("vi_separability: unlabeled point at index " +
                                    std::to_string(i));
    per_class[static_cast<std::size_t>(*lbl)].push_back(values[i]);
  }

  std::vector<SemanticClass> present;
  std::string underpopulated;
  for (SemanticClass c : kAllClasses) {
    const auto& v = per_class[static_cast<std::size_t>(c)];
    if (v.empty()) continue;
    if (v.size() < 10) {
      if (!underpopulated.empty()) underpopulated += ", ";
      underpopulated += class_name(c);
      underpopulated += " (" + std::to_string(v.size()) + ")";
    }
    present.push_back(c);
  }
  if (!underpopulated.empty()) {
    throw ValidationError("vi_separability: classes with fewer than 10 points: " +
                          underpopulated);
  }
  if (present.size() < 2) {
    throw ValidationError("vi_separability requires at least 2 classes present");
  }

  SeparabilityReport report;
  report.kind = kind;
  std::array<double, kNumClasses> med{}, iqr{};
  for (SemanticClass c : present) {
    const auto idx = static_cast<std::size_t>(c);
    const auto q = quartiles(per_class[idx]);
    report.per_class_stats[c] = q;
    med[idx] = q.median;
    iqr[idx] = q.q75 - q.q25;
  }

  constexpr double kEps = 1e-12;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < present.size(); ++a) {
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      const auto ia = static_cast<std::size_t>(present[a]);
      const auto ib = static_cast<std::size_t>(present[b]);
      const double pooled_iqr = 0.5 * (iqr[ia] + iqr[ib]);
      sum += std::abs(med[ia] - med[ib]) / (pooled_iqr + kEps);
      ++pairs;
    }
  }
  report.score = sum / static_cast<double>(pairs);
  return report;
}

std::string to_text(const SeparabilityReport& report) {
  std::string out = "# vegetation index separability: ";
  out += vi_name(report.kind);
  out += "\n# class q25 median q75\n";
  char line[160];
  for (const auto& [cls, q] : report.per_class_stats) {
    std::snprintf(line, sizeof(line), "%-16s %12.6f %12.6f %12.6f\n", class_name(cls),
                  q.q25, q.median, q.q75);
    out += line;
  }
  std::snprintf(line, sizeof(line), "score %.6f\n", report.score);
  out += line;
  return out;
}

}  // namespace forestseg
