#pragma once

#include <cstdint>
#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

struct SorParams {
  int k_neighbors = 6;          // neighbors per point (query point excluded)
  double sigma_multiplier = 1.0;
};

template <typename CloudT>
struct SorResult {
  CloudT filtered;
  std::vector<std::size_t> removed;  // ascending original indices
};

/// Statistical outlier removal: a point survives iff its mean distance to
/// its k nearest neighbors is <= mean + sigma_multiplier * stddev of that
/// quantity over all points. Survivor order is preserved. Requires more
/// than k_neighbors points.
SorResult<ChannelCloud> sor_filter(const ChannelCloud& cloud, const SorParams& params);
SorResult<MultispectralCloud> sor_filter(const MultispectralCloud& cloud,
                                         const SorParams& params);

struct MergeParams {
  double radius_m = 0.25;
  int neighbors = 1;  // fixed at 1
};

/// Fuses the three monochromatic clouds. Candidate geometry is the union of
/// all input points (SWIR, NIR, GREEN order); each candidate takes the
/// reflectance of its single nearest neighbor within radius_m from every
/// channel and is discarded if any channel has none. Ties at equal distance
/// go to the smallest point index. Candidates keep their own coordinates
/// and label.
MultispectralCloud merge_channels(const ChannelCloud& swir, const ChannelCloud& nir,
                                  const ChannelCloud& green, const MergeParams& params);

struct HeightNormParams {
  double cell_size_m = 1.0;
};

/// Two-stage height normalization: per-point height above the local
/// minimum of its XY grid cell (falling back to the 3x3 cell block when the
/// cell holds fewer than 3 points), then a global shift so the minimum
/// normalized height is exactly 0.
MultispectralCloud normalize_height(const MultispectralCloud& cloud,
                                    const HeightNormParams& params);

/// Subtracts the planimetric means from X and Y; Z untouched.
MultispectralCloud center_planimetric(const MultispectralCloud& cloud);

/// Robust scaling ((v - median) / IQR) followed by min-max rescale to
/// [0, 1]. Degenerate inputs: IQR = 0 skips the robust stage; a constant
/// sequence maps to all 0.5.
std::vector<double> robust_minmax_scale(const std::vector<double>& values);

}  // namespace forestseg
