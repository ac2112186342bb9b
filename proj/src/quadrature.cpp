#include "sgdva/quadrature.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

namespace sgdva {

namespace {

QuadratureRule golub_welsch(const Vector& diag, const Vector& offdiag, double mu0) {
  const Index n = diag.size();
  Matrix J = Matrix::Zero(n, n);
  J.diagonal() = diag;
  for (Index i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = offdiag(i);
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

const QuadratureRule& cached_legendre(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "gauss_legendre: n must be >= 1");
  Vector diag = Vector::Zero(n);
  Vector off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

QuadratureRule gauss_hermite_normal(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "gauss_hermite_normal: n must be >= 1");
  // Jacobi matrix of the probabilists' Hermite recurrence.
  Vector diag = Vector::Zero(n);
  Vector off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  return golub_welsch(diag, off, 1.0);
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const std::vector<double>& breakpoints, double max_panel, int order) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const QuadratureRule& rule = cached_legendre(order);
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double pa = a + p * width;
      const double mid = pa + 0.5 * width, half = 0.5 * width;
      double s = 0.0;
      for (Index k = 0; k < rule.nodes.size(); ++k) s += rule.weights(k) * f(mid + half * rule.nodes(k));
      total += half * s;
    }
  }
  return total;
}

double gaussian_expectation(const std::function<double(double)>& f, const std::vector<double>& breakpoints,
                            double max_panel, int order) {
  return integrate([&](double z) { return f(z) * normal_pdf(z); }, -12.0, 12.0, breakpoints, max_panel, order);
}

}  // namespace sgdva
