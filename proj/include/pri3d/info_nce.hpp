#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pri3d {

/// Read-only view of `rows` feature vectors of length `dim`, row-major.
struct FeatureTable {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t dim = 0;

  std::span<const double> Row(std::size_t r) const { return values.subspan(r * dim, dim); }
};

/// One positive pair (a, b): row of the first table, row of the second.
struct RowPair {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct LossReport {
  double loss_sum = 0.0;
  double loss_mean = 0.0;
  std::size_t match_count = 0;
  double temperature = 0.0;
  /// d loss_sum / d features, same layout as the input tables. Empty when
  /// gradients were not requested. Rows not referenced by M stay zero.
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};

struct InfoNceOptions {
  double temperature = 0.4;
  /// L2-normalize each feature before the dot product; gradients include
  /// the normalization chain.
  bool normalize = true;
  bool compute_gradients = true;
};

/// Contrastive loss over the positive set M:
///   sum over (a,b) in M of −log( exp(f_a·f_b/τ) / Σ_{(·,k) in M} exp(f_a·f_k/τ) ).
/// The denominator runs over the second element of every pair in M,
/// duplicates included. Each row is stabilized by its maximum logit.
/// Throws kEmptyMatchSet, kNonFiniteFeature, kNormalizationOfZeroVector,
/// kOutOfBounds (row index), kInvalidArgument (τ <= 0, dim mismatch).
LossReport PointInfoNce(const FeatureTable& a, const FeatureTable& b, std::span<const RowPair> matches,
                        const InfoNceOptions& options = {});

/// The single-row loss term −s_pos + logsumexp(s) for precomputed logits,
/// stabilized by the row maximum.
double InfoNceTerm(std::span<const double> logits, std::size_t positive);

}  // namespace pri3d
