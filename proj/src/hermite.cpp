#include "sgdva/hermite.hpp"

#include "sgdva/quadrature.hpp"

#include <algorithm>

namespace sgdva {

namespace {

constexpr int kMaxDegree = 4096;

void check_degree(int k) {
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "hermite degree must be >= 0");
  if (k > kMaxDegree) throw Error(ErrorCode::kDegreeOverflow, "hermite degree exceeds supported range");
}

// Fills out[0..k]; returns false if any value left the double range.
bool fill_values(int k, double z, double* out) {
  out[0] = 1.0;
  if (k >= 1) out[1] = z;
  for (int i = 1; i < k; ++i) out[i + 1] = (z * out[i] - std::sqrt(static_cast<double>(i)) * out[i - 1]) / std::sqrt(i + 1.0);
  return std::isfinite(out[k]) && (k == 0 || std::isfinite(out[k - 1]));
}

}  // namespace

double hermite_he(int i, double z) {
  check_degree(i);
  if (i == 0) return 1.0;
  double prev = 1.0, cur = z;
  for (int n = 1; n < i; ++n) {
    const double next = (z * cur - std::sqrt(static_cast<double>(n)) * prev) / std::sqrt(n + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

Vector hermite_values(int k, double z) {
  check_degree(k);
  Vector v(k + 1);
  fill_values(k, z, v.data());
  return v;
}

double hermite_he_derivative(int i, double z) {
  if (i == 0) return 0.0;
  return std::sqrt(static_cast<double>(i)) * hermite_he(i - 1, z);
}

double HermiteExpansion::partial_norm_sq(int k) const {
  const int top = std::min(k, k_max);
  return top < 0 ? 0.0 : coeffs.head(top + 1).squaredNorm();
}

double HermiteExpansion::evaluate(double z, int k) const {
  const int top = std::min(k, k_max);
  if (top < 0) return 0.0;
  return coeffs.head(top + 1).dot(hermite_values(top, z));
}

HermiteExpansion expand(const std::function<double(double)>& f, int k_max, std::int64_t mc_samples,
                        std::uint64_t seed) {
  check_degree(k_max);
  if (mc_samples < 1) throw Error(ErrorCode::kInvalidArgument, "expand: mc_samples must be >= 1");
  Rng rng(seed);
  std::vector<MeanAccumulator> acc(k_max + 1);
  std::vector<double> he(k_max + 1);
  for (std::int64_t s = 0; s < mc_samples; ++s) {
    const double z = rng.normal();
    if (!fill_values(k_max, z, he.data()))
      throw Error(ErrorCode::kDegreeOverflow, "expand: He_k overflows at a sampled point");
    const double fz = f(z);
    for (int i = 0; i <= k_max; ++i) acc[i].add(fz * he[i]);
  }
  HermiteExpansion e;
  e.k_max = k_max;
  e.coeffs.resize(k_max + 1);
  e.std_errors.resize(k_max + 1);
  for (int i = 0; i <= k_max; ++i) {
    const Estimate est = acc[i].estimate();
    e.coeffs(i) = est.value;
    e.std_errors(i) = est.std_error;
  }
  return e;
}

HermiteExpansion expand_quadrature(const std::function<double(double)>& f, int k_max,
                                   const std::vector<double>& breakpoints) {
  check_degree(k_max);
  HermiteExpansion e;
  e.k_max = k_max;
  e.coeffs = Vector::Zero(k_max + 1);
  e.std_errors = Vector::Zero(k_max + 1);
  std::vector<double> he(k_max + 1);
  // Panel width shrinks with degree so the oscillations of He_k stay resolved.
  const double panel = std::min(0.5, 2.0 / std::sqrt(k_max + 1.0));
  // One pass over the nodes, accumulating every degree at once.
  std::vector<double> cuts{-12.0, 12.0};
  for (double b : breakpoints)
    if (b > -12.0 && b < 12.0) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const QuadratureRule rule = gauss_legendre(24);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * width, half = 0.5 * width;
      for (Index q = 0; q < rule.nodes.size(); ++q) {
        const double z = mid + half * rule.nodes(q);
        fill_values(k_max, z, he.data());
        const double w = half * rule.weights(q) * f(z) * normal_pdf(z);
        for (int i = 0; i <= k_max; ++i) e.coeffs(i) += w * he[i];
      }
    }
  }
  return e;
}

HermiteExpansion expand_gauss_hermite(const std::function<double(double)>& f, int k_max, int nodes) {
  check_degree(k_max);
  const QuadratureRule rule = gauss_hermite_normal(nodes);
  HermiteExpansion e;
  e.k_max = k_max;
  e.coeffs = Vector::Zero(k_max + 1);
  e.std_errors = Vector::Zero(k_max + 1);
  std::vector<double> he(k_max + 1);
  for (Index q = 0; q < rule.nodes.size(); ++q) {
    if (!fill_values(k_max, rule.nodes(q), he.data()))
      throw Error(ErrorCode::kDegreeOverflow, "expand_gauss_hermite: He_k overflows at a node");
    const double w = rule.weights(q) * f(rule.nodes(q));
    for (int i = 0; i <= k_max; ++i) e.coeffs(i) += w * he[i];
  }
  return e;
}

double tail_norm_sq(const HermiteExpansion& expansion, int k, double total_norm_sq) {
  return std::max(0.0, total_norm_sq - expansion.partial_norm_sq(k));
}

Estimate l2_norm_sq(const std::function<double(double)>& f, std::int64_t mc_samples, std::uint64_t seed) {
  Rng rng(seed);
  MeanAccumulator acc;
  for (std::int64_t s = 0; s < mc_samples; ++s) {
    const double v = f(rng.normal());
    acc.add(v * v);
  }
  return acc.estimate();
}

}  // namespace sgdva
