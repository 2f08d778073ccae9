#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forestseg/error.hpp"

namespace forestseg {

/// The three scanner channels and their fixed wavelengths.
enum class Channel : std::uint8_t { Swir = 0, Nir = 1, Green = 2 };

inline constexpr std::array<Channel, 3> kAllChannels = {
    Channel::Swir, Channel::Nir, Channel::Green};

inline constexpr int wavelength_nm(Channel c) {
  switch (c) {
    case Channel::Swir: return 1550;
    case Channel::Nir: return 905;
    case Channel::Green: return 532;
  }
  return 0;
}

inline constexpr const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Swir: return "swir";
    case Channel::Nir: return "nir";
    case Channel::Green: return "green";
  }
  return "?";
}

Channel channel_from_name(const std::string& name);

/// Forest component classes. Codes are the canonical serialized order used
/// by confusion matrices, class weights, and reports.
enum class SemanticClass : std::uint8_t {
  Ground = 0,
  LowVegetation = 1,
  Trunk = 2,
  Branches = 3,
  Foliage = 4,
  WoodyDebris = 5,
};

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<SemanticClass, kNumClasses> kAllClasses = {
    SemanticClass::Ground,    SemanticClass::LowVegetation,
    SemanticClass::Trunk,     SemanticClass::Branches,
    SemanticClass::Foliage,   SemanticClass::WoodyDebris};

inline constexpr const char* class_name(SemanticClass c) {
  switch (c) {
    case SemanticClass::Ground: return "ground";
    case SemanticClass::LowVegetation: return "low_vegetation";
    case SemanticClass::Trunk: return "trunk";
    case SemanticClass::Branches: return "branches";
    case SemanticClass::Foliage: return "foliage";
    case SemanticClass::WoodyDebris: return "woody_debris";
  }
  return "?";
}

SemanticClass class_from_code(int code);

/// One return from a single monochromatic scanner.
struct ChannelPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double reflectance_db = 0.0;
  Channel channel = Channel::Swir;
  std::optional<SemanticClass> label;
};

/// All returns of one scanner, in acquisition order.
struct ChannelCloud {
  Channel channel = Channel::Swir;
  std::vector<ChannelPoint> points;

  std::size_t size() const { return points.size(); }

  /// Every point must carry the cloud's channel identifier.
  void validate() const;
};

/// A fused point carrying reflectance in all three wavelengths.
struct MultispectralPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<double> z_normalized;  // >= 0 when present
  std::array<double, 3> reflectance_db{0.0, 0.0, 0.0};  // indexed by Channel
  std::optional<SemanticClass> label;

  double reflectance(Channel c) const {
    return reflectance_db[static_cast<std::size_t>(c)];
  }
  void set_reflectance(Channel c, double db) {
    reflectance_db[static_cast<std::size_t>(c)] = db;
  }
};

/// Fused cloud. Point order is stable across serialization round-trips.
struct MultispectralCloud {
  std::vector<MultispectralPoint> points;
  std::string provenance;  // free text: source files, merge params, seed

  std::size_t size() const { return points.size(); }
  bool has_z_normalized() const {
    return !points.empty() && points.front().z_normalized.has_value();
  }
  bool has_labels() const {
    return !points.empty() && points.front().label.has_value();
  }
};

/// Fraction of points per class; classes absent from the cloud map to 0.
/// Every point must be labeled, else throws naming the first offender.
std::map<SemanticClass, double> class_distribution(
    const MultispectralCloud& cloud);

}  // namespace forestseg
