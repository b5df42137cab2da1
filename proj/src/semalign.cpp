#include "pseudobox/semalign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pseudobox/error.hpp"

namespace pbox {

void TextPromptBank::validate() const {
  if (class_names.size() != embeddings.size() || embeddings.empty()) {
    throw DomainError("prompt bank needs exactly one embedding per class");
  }
  if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be positive");
  for (const auto& e : embeddings) {
    if (e.size() != embeddings[0].size()) throw DomainError("prompt embeddings differ in dimension");
    if (!e.allFinite()) throw DomainError("prompt embedding is not finite");
  }
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) throw DomainError("feature dimensions differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("cosine of a zero-norm vector");
  return a.dot(b) / (na * nb);
}

double alignment_loss(const FeatureVector& f2d, std::span<const FeatureVector> voxel_features) {
  double loss = 0.0;
  for (const auto& f : voxel_features) loss += 1.0 - cosine_similarity(f2d, f);
  return loss;
}

FeatureVector average_box_feature(std::span<const FeatureVector> voxel_features) {
  if (voxel_features.empty()) throw DomainError("average of no features");
  FeatureVector sum = FeatureVector::Zero(voxel_features[0].size());
  for (const auto& f : voxel_features) {
    if (f.size() != sum.size()) throw DomainError("feature dimensions differ");
    sum += f;
  }
  return sum / static_cast<double>(voxel_features.size());
}

std::vector<double> ov_classify(const FeatureVector& box_feature, const TextPromptBank& bank) {
  bank.validate();
  std::vector<double> logits(bank.embeddings.size());
  for (size_t c = 0; c < logits.size(); ++c) {
    logits[c] = cosine_similarity(box_feature, bank.embeddings[c]) / bank.temperature;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  for (auto& l : logits) l /= z;
  return logits;
}

std::vector<ClassScore> top_k(std::span<const double> probs, size_t k) {
  std::vector<ClassScore> all(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) all[i] = {i, probs[i]};
  std::stable_sort(all.begin(), all.end(),
                   [](const ClassScore& a, const ClassScore& b) { return a.prob > b.prob; });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace pbox
