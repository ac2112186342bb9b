#pragma once

#include <functional>
#include <vector>

#include "sgdva/core.hpp"

namespace sgdva {

struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

// Gauss-Legendre on [-1, 1] via Golub-Welsch.
QuadratureRule gauss_legendre(int n);

// Gauss-Hermite for the standard normal weight: sum w_i f(x_i) ~ E f(z).
QuadratureRule gauss_hermite_normal(int n);

// Integral of f over [lo, hi], split at `breakpoints` and into panels no wider than `max_panel`.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const std::vector<double>& breakpoints = {}, double max_panel = 0.5, int order = 20);

// E f(z) for z ~ N(0,1), truncated to |z| <= 12.
double gaussian_expectation(const std::function<double(double)>& f,
                            const std::vector<double>& breakpoints = {}, double max_panel = 0.5,
                            int order = 20);

}  // namespace sgdva
