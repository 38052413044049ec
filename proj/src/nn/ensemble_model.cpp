#include "octskin/ensemble_model.hpp"

namespace octskin {

EnsembleModel::EnsembleModel(std::vector<Model> m, EnsembleWeights w) : members(std::move(m)), weights(std::move(w)) {
  if (members.size() != weights.size())
    throw ContractError("ensemble: " + std::to_string(members.size()) + " members but " +
                        std::to_string(weights.size()) + " weights");
  for (const auto& member : members)
    if (member.spec().num_classes != kNumClasses) throw ContractError("ensemble: members must predict 4 classes");
}

ProbabilityMap ensemble_predict(const EnsembleModel& em, const OctImage& img, const InferenceParams& params) {
  std::vector<ProbabilityMap> maps;
  maps.reserve(em.members.size());
  for (const auto& m : em.members) maps.push_back(predict_probs(m, img, params));
  return combine_probabilities(maps, em.weights);
}

std::vector<std::vector<ProbabilityMap>> member_probabilities(const std::vector<Model>& members,
                                                              const std::vector<OctImage>& images,
                                                              const InferenceParams& params) {
  std::vector<std::vector<ProbabilityMap>> out(members.size());
  for (std::size_t j = 0; j < members.size(); ++j)
    for (const auto& img : images) out[j].push_back(predict_probs(members[j], img, params));
  return out;
}

WeightSearchResult optimize_weights(const std::vector<Model>& members, const DatasetManifest& val, double step,
                                    const InferenceParams& params) {
  if (val.entries.empty()) throw ContractError("optimize_weights: empty validation set");
  if (members.empty()) throw ContractError("optimize_weights: no members");
  std::vector<OctImage> images;
  std::vector<LabelMask> masks;
  for (const auto& e : val.entries) {
    auto [img, mask] = load_entry(e);
    images.push_back(std::move(img));
    masks.push_back(std::move(mask));
  }
  return grid_search_weights(member_probabilities(members, images, params), masks, step);
}

}  // namespace octskin
