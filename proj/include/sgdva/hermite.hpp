#pragma once

#include <functional>
#include <vector>

#include "sgdva/core.hpp"

namespace sgdva {

// Normalized probabilists' Hermite polynomial He_i(z); orthonormal under N(0,1).
double hermite_he(int i, double z);

// He_0(z) .. He_k(z) in one recurrence pass.
Vector hermite_values(int k, double z);

// d/dz He_i(z) = sqrt(i) He_{i-1}(z).
double hermite_he_derivative(int i, double z);

struct HermiteExpansion {
  Vector coeffs;      // a(0) .. a(k_max)
  Vector std_errors;  // zero for quadrature-based expansions
  int k_max = 0;

  double partial_norm_sq(int k) const;  // sum_{i<=k} a(i)^2
  double evaluate(double z, int k) const;  // P_k f(z)
};

constexpr int kDefaultKMax = 64;
constexpr std::int64_t kDefaultHermiteSamples = 200000;

// Monte-Carlo coefficients a(i) = E[f(z) He_i(z)].
HermiteExpansion expand(const std::function<double(double)>& f, int k_max = kDefaultKMax,
                        std::int64_t mc_samples = kDefaultHermiteSamples, std::uint64_t seed = 0);

// Deterministic coefficients by composite Gauss-Legendre on [-12, 12]; handles kinks listed in `breakpoints`.
HermiteExpansion expand_quadrature(const std::function<double(double)>& f, int k_max,
                                   const std::vector<double>& breakpoints = {});

// Gauss-Hermite coefficients; accurate only for smooth f.
HermiteExpansion expand_gauss_hermite(const std::function<double(double)>& f, int k_max, int nodes = 160);

// ||P_{>k} f||^2 = total - sum_{i<=k} a(i)^2, clamped at 0.
double tail_norm_sq(const HermiteExpansion& expansion, int k, double total_norm_sq);

// E[f(z)^2] by Monte Carlo.
Estimate l2_norm_sq(const std::function<double(double)>& f, std::int64_t mc_samples, std::uint64_t seed);

}  // namespace sgdva
