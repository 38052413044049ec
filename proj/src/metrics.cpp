#include "octskin/metrics.hpp"

namespace octskin {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  for (int g = 0; g < kNumClasses; ++g)
    for (int p = 0; p < kNumClasses; ++p) counts[g][p] += o.counts[g][p];
  return *this;
}

ConfusionMatrix confusion(const LabelMask& pred, const LabelMask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width())
    throw ContractError("confusion: prediction and ground truth shapes differ");
  ConfusionMatrix cm;
  const auto& p = pred.labels.data();
  const auto& g = gt.labels.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= kNumClasses || g[i] >= kNumClasses)
      throw SchemaError("confusion: class id out of range");
    ++cm.counts[g[i]][p[i]];
  }
  return cm;
}

IoUReport iou(const ConfusionMatrix& cm) {
  IoUReport rep;
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      row += cm.counts[c][k];
      col += cm.counts[k][c];
    }
    const std::uint64_t tp = cm.counts[c][c];
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    const double v = static_cast<double>(tp) / static_cast<double>(uni);
    rep.per_class[c] = v;
    sum += v;
    ++defined;
  }
  if (defined == 0) throw MetricError("iou: every class is undefined (empty confusion matrix)");
  rep.mean_iou = sum / defined;
  return rep;
}

double cohen_kappa(const LabelMask& a, const LabelMask& b) {
  const ConfusionMatrix cm = confusion(a, b);
  const double n = static_cast<double>(cm.total());
  if (n == 0) throw MetricError("cohen_kappa: empty masks");
  double agree = 0.0, chance = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    double pa = 0.0, pb = 0.0;
    for (int k = 0; k < kNumClasses; ++k) {
      pa += static_cast<double>(cm.counts[c][k]);
      pb += static_cast<double>(cm.counts[k][c]);
    }
    agree += static_cast<double>(cm.counts[c][c]);
    chance += (pa / n) * (pb / n);
  }
  const double po = agree / n;
  if (chance >= 1.0) return 1.0;
  return (po - chance) / (1.0 - chance);
}

}  // namespace octskin
