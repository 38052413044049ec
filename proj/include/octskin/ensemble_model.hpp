#pragma once

#include <vector>

#include "octskin/data_io.hpp"
#include "octskin/ensemble.hpp"
#include "octskin/segnet.hpp"

namespace octskin {

struct EnsembleModel {
  std::vector<Model> members;
  EnsembleWeights weights;

  EnsembleModel(std::vector<Model> m, EnsembleWeights w);
};

/// Weighted mean of the members' full-frame probability maps.
ProbabilityMap ensemble_predict(const EnsembleModel& em, const OctImage& img, const InferenceParams& params = {});

/// Member maps for every validation image, member-major.
std::vector<std::vector<ProbabilityMap>> member_probabilities(const std::vector<Model>& members,
                                                              const std::vector<OctImage>& images,
                                                              const InferenceParams& params = {});

/// Simplex-grid weight search maximizing validation mean IoU.
WeightSearchResult optimize_weights(const std::vector<Model>& members, const DatasetManifest& val, double step = 0.1,
                                    const InferenceParams& params = {});

}  // namespace octskin
