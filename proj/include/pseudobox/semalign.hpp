#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pbox {

using FeatureVector = Eigen::VectorXd;

struct TextPromptBank {
  std::vector<std::string> class_names;
  std::vector<FeatureVector> embeddings;
  double temperature = 1.0;

  void validate() const;
  int dimension() const { return embeddings.empty() ? 0 : static_cast<int>(embeddings[0].size()); }
};

// Cosine similarity; throws DomainError on a zero-norm vector or a dimension mismatch.
double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

// Sum over voxel features of (1 - cos(f2d, f_k)); lies in [0, 2n].
double alignment_loss(const FeatureVector& f2d, std::span<const FeatureVector> voxel_features);

// Componentwise mean. Throws DomainError on an empty list.
FeatureVector average_box_feature(std::span<const FeatureVector> voxel_features);

// p_c = softmax_c(cos(f, t_c) / temperature).
std::vector<double> ov_classify(const FeatureVector& box_feature, const TextPromptBank& bank);

struct ClassScore {
  size_t class_index = 0;
  double prob = 0.0;
};

// Highest `k` probabilities, descending (lower index first on ties).
std::vector<ClassScore> top_k(std::span<const double> probs, size_t k);

}  // namespace pbox
