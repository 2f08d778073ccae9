#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "forestseg/types.hpp"

namespace forestseg {

struct SpectralStats {
  double mean_db = 0.0;
  double std_db = 1.0;
};

/// Class-conditional reflectance model, [class][channel] in dB.
///
/// The default table fixes the qualitative orderings the pipeline relies
/// on: low vegetation and foliage sit close in GREEN and NIR but split by
/// ~3 dB in SWIR (water absorption), wood (trunk, branches, debris) is
/// bright in SWIR and dark in GREEN, and ground falls between. Values are
/// artifact-chosen; only orderings are meaningful.
using SpectralModel = std::array<std::array<SpectralStats, 3>, kNumClasses>;

constexpr SpectralModel kDefaultSpectralModel = {{
    // {SWIR 1550 nm}, {NIR 905 nm}, {GREEN 532 nm}
    {{{-6.0, 1.0}, {-7.0, 1.0}, {-8.0, 1.0}}},    // ground
    {{{-14.0, 1.2}, {-4.0, 1.0}, {-10.0, 1.0}}},  // low vegetation
    {{{-3.0, 0.9}, {-5.0, 1.0}, {-12.0, 1.0}}},   // trunk
    {{{-4.8, 0.9}, {-5.2, 1.0}, {-11.0, 1.0}}},   // branches
    {{{-11.0, 1.2}, {-4.3, 1.0}, {-9.7, 1.0}}},   // foliage
    {{{-3.6, 0.9}, {-6.2, 1.0}, {-6.8, 1.0}}},    // woody debris
}};

/// Scene recipe: ground plane, low-vegetation tufts, trunk cylinders,
/// branch segments, foliage ellipsoids, and woody-debris logs, with
/// class-conditional spectra. `class_fractions` defaults follow the
/// observed forest composition (ground 20.14%, low vegetation 6.54%,
/// trunk 1.51%, branches 2.52%, foliage 69.08%, debris 0.23%).
struct SceneSpec {
  double extent_x_m = 80.0;
  double extent_y_m = 80.0;
  double terrain_slope = 0.0;  // z = slope * x; 0 = flat terrain
  int n_trees = 150;
  std::size_t total_points = 600000;  // reference cloud size
  std::array<double, kNumClasses> class_fractions = {0.2014, 0.0654, 0.0151,
                                                     0.0252, 0.6908, 0.0023};
  SpectralModel spectral = kDefaultSpectralModel;
  /// Relative per-channel densities for the channel thinnings
  /// (SWIR : NIR : GREEN), scaled so the densest channel keeps
  /// `channel_keep_scale` of the reference points.
  std::array<double, 3> channel_density_ratio = {530.0, 163.0, 604.0};
  double channel_keep_scale = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  ChannelCloud swir;
  ChannelCloud nir;
  ChannelCloud green;
  /// Fully labeled fused ground truth carrying all three reflectances;
  /// the merge oracle target.
  MultispectralCloud reference;
};

/// Deterministic under spec.seed: primitives draw from counter-based RNG
/// streams keyed by primitive index, so emission order and values are
/// schedule-independent. Per-class point counts hit the requested
/// fractions exactly (largest-remainder rounding). When n_trees is 0 the
/// tree-borne classes (trunk, branches, foliage, debris) are dropped and
/// their mass moves to ground / low vegetation.
SyntheticScene generate_scene(const SceneSpec& spec);

/// Plain-text `key = value` config (unknown keys rejected); all keys
/// optional, missing ones keep their defaults.
SceneSpec read_scene_spec(const std::filesystem::path& path);

/// Writes a fully populated config for the given spec (handy as a starting
/// template).
void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path);

}  // namespace forestseg
