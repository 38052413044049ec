#pragma once

#include "octskin/types.hpp"

namespace octskin {

struct DespeckleParams {
  int kernel_px = 3;
  int passes = 1;
};

/// Square median filter with edge-replicated borders. `kernel_px` must be odd
/// and no larger than the shorter image side.
OctImage median_filter(const OctImage& img, int kernel_px);

/// `passes` successive median filters.
OctImage despeckle(const OctImage& img, int kernel_px = 3, int passes = 1);

/// Min-max rescale to [0,1]; a constant image maps to all zeros.
OctImage normalize(const OctImage& img);

/// despeckle followed by normalize; the pipeline input stage.
OctImage preprocess(const OctImage& img, const DespeckleParams& params = {});

}  // namespace octskin
