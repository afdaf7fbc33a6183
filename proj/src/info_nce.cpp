#include "pri3d/info_nce.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pri3d/error.hpp"

namespace pri3d {
namespace {

double Dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Copies the referenced rows (optionally unit-normalized) into a compact
// table and remembers each row's norm for the backward pass.
struct CompactRows {
  std::vector<std::size_t> source_row;
  std::vector<double> values;
  std::vector<double> norms;
  std::unordered_map<std::size_t, std::size_t> slot;
};

CompactRows Gather(const FeatureTable& t, std::span<const RowPair> matches, bool take_a, bool normalize) {
  CompactRows out;
  for (const RowPair& m : matches) {
    const std::size_t r = take_a ? m.a : m.b;
    if (r >= t.rows) throw Error(ErrorCode::kOutOfBounds, "match references a missing feature row");
    if (out.slot.emplace(r, out.source_row.size()).second) out.source_row.push_back(r);
  }
  out.values.resize(out.source_row.size() * t.dim);
  out.norms.assign(out.source_row.size(), 1.0);
  for (std::size_t s = 0; s < out.source_row.size(); ++s) {
    const auto row = t.Row(out.source_row[s]);
    for (double x : row) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteFeature, "non-finite feature value");
    }
    double scale = 1.0;
    if (normalize) {
      const double n = std::sqrt(Dot(row, row));
      if (n == 0.0) throw Error(ErrorCode::kNormalizationOfZeroVector, "cannot normalize a zero feature");
      out.norms[s] = n;
      scale = 1.0 / n;
    }
    for (std::size_t c = 0; c < t.dim; ++c) out.values[s * t.dim + c] = row[c] * scale;
  }
  return out;
}

// Maps d/d(unit feature) back to d/d(raw feature) and scatters it into the
// full-size gradient buffer.
void Scatter(const CompactRows& rows, const std::vector<double>& grad_compact, std::size_t dim, bool normalize,
             std::vector<double>& grad_full) {
  for (std::size_t s = 0; s < rows.source_row.size(); ++s) {
    const double* g = grad_compact.data() + s * dim;
    const double* u = rows.values.data() + s * dim;
    double* out = grad_full.data() + rows.source_row[s] * dim;
    if (!normalize) {
      for (std::size_t c = 0; c < dim; ++c) out[c] += g[c];
      continue;
    }
    double proj = 0.0;
    for (std::size_t c = 0; c < dim; ++c) proj += u[c] * g[c];
    for (std::size_t c = 0; c < dim; ++c) out[c] += (g[c] - u[c] * proj) / rows.norms[s];
  }
}

}  // namespace

double InfoNceTerm(std::span<const double> logits, std::size_t positive) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double s : logits) z += std::exp(s - mx);
  return -(logits[positive] - mx) + std::log(z);
}

LossReport PointInfoNce(const FeatureTable& a, const FeatureTable& b, std::span<const RowPair> matches,
                        const InfoNceOptions& options) {
  if (matches.empty()) throw Error(ErrorCode::kEmptyMatchSet, "correspondence set is empty");
  if (!(options.temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  if (a.dim != b.dim || a.dim == 0) throw Error(ErrorCode::kInvalidArgument, "feature dimensions differ");
  const std::size_t dim = a.dim;
  const std::size_t n = matches.size();
  const double inv_tau = 1.0 / options.temperature;

  const CompactRows ra = Gather(a, matches, true, options.normalize);
  const CompactRows rb = Gather(b, matches, false, options.normalize);
  std::vector<std::size_t> sa(n);
  std::vector<std::size_t> sb(n);
  for (std::size_t i = 0; i < n; ++i) {
    sa[i] = ra.slot.at(matches[i].a);
    sb[i] = rb.slot.at(matches[i].b);
  }

  LossReport report;
  report.match_count = n;
  report.temperature = options.temperature;
  std::vector<double> ga;
  std::vector<double> gb;
  if (options.compute_gradients) {
    ga.assign(ra.values.size(), 0.0);
    gb.assign(rb.values.size(), 0.0);
  }

  std::vector<double> logits(n);
  std::vector<double> prob(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> fa(ra.values.data() + sa[i] * dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
      logits[k] = Dot(fa, std::span<const double>(rb.values.data() + sb[k] * dim, dim)) * inv_tau;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      prob[k] = std::exp(logits[k] - mx);
      z += prob[k];
    }
    total += -(logits[i] - mx) + std::log(z);
    if (!options.compute_gradients) continue;

    // d term / d logit_k = softmax_k − [k == i].
    double* g_fa = ga.data() + sa[i] * dim;
    for (std::size_t k = 0; k < n; ++k) {
      const double coeff = (prob[k] / z - (k == i ? 1.0 : 0.0)) * inv_tau;
      if (coeff == 0.0) continue;
      const double* fb = rb.values.data() + sb[k] * dim;
      double* g_fb = gb.data() + sb[k] * dim;
      for (std::size_t c = 0; c < dim; ++c) {
        g_fa[c] += coeff * fb[c];
        g_fb[c] += coeff * fa[c];
      }
    }
  }
  report.loss_sum = total;
  report.loss_mean = total / static_cast<double>(n);

  if (options.compute_gradients) {
    report.grad_a.assign(a.rows * dim, 0.0);
    report.grad_b.assign(b.rows * dim, 0.0);
    Scatter(ra, ga, dim, options.normalize, report.grad_a);
    Scatter(rb, gb, dim, options.normalize, report.grad_b);
  }
  return report;
}

}  // namespace pri3d
