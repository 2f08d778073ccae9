#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

enum class CloudFormat { Text, Binary };

/// Common header for both cloud file formats.
///
/// Text layout: `#`-prefixed key lines (version, channels, labels, znorm,
/// count) followed by one point per line, space separated, column order
///   x y z [z_norm] r_swir r_nir r_green [label]
/// (per-channel files carry a single reflectance column). Coordinates are
/// printed with 9 fractional digits, reflectances with 6.
///
/// Binary layout: 16-byte magic "MSFORESTCLOUD\0\0\0", then the header
/// fields little-endian, then packed records: 64-bit float coordinates
/// (and z_norm when present), 32-bit float reflectances, 8-bit label.
struct CloudFileHeader {
  std::uint32_t format_version = 1;
  std::uint8_t channel_mask = 0;  // bit i set = Channel(i) present
  bool has_labels = false;
  bool has_z_normalized = false;
  std::uint64_t point_count = 0;

  bool has_channel(Channel c) const {
    return (channel_mask >> static_cast<unsigned>(c)) & 1u;
  }
  void set_channel(Channel c) { channel_mask |= (1u << static_cast<unsigned>(c)); }
  bool multispectral() const { return channel_mask == 0b111; }
};

void write_channel_cloud(const ChannelCloud& cloud,
                         const std::filesystem::path& path, CloudFormat format);

/// Header channel must equal expected_channel; malformed records raise
/// errors naming the record index.
ChannelCloud read_channel_cloud(const std::filesystem::path& path,
                                Channel expected_channel);

void write_multispectral_cloud(const MultispectralCloud& cloud,
                               const std::filesystem::path& path,
                               CloudFormat format);

MultispectralCloud read_multispectral_cloud(const std::filesystem::path& path);

/// Peek at a file's header without reading the points.
CloudFileHeader read_cloud_header(const std::filesystem::path& path);

enum class SplitUnit { PerPoint, PerPlot };

struct SplitSpec {
  double ratio_train = 0.8;  // in (0, 1)
  std::uint64_t seed = 0;
  SplitUnit unit = SplitUnit::PerPlot;
};

struct SplitResult {
  std::vector<MultispectralCloud> train;
  std::vector<MultispectralCloud> test;
};

/// Disjoint, exhaustive split. PerPlot keeps each input cloud intact on one
/// side (requires >= 2 clouds); PerPoint pools all points and assigns them
/// by seeded shuffle so |train| = round(ratio * total), clamped so neither
/// side is empty.
SplitResult split_train_test(const std::vector<MultispectralCloud>& clouds,
                             const SplitSpec& spec);

}  // namespace forestseg
