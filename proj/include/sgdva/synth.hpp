#pragma once

#include <optional>
#include <string>

#include "sgdva/activation.hpp"

namespace sgdva {

// Rows of `xs` are samples.
struct SampleBatch {
  RowMatrix xs;
  Vector ys;
  std::uint64_t seed = 0;

  Index size() const { return xs.rows(); }
  Index dim() const { return xs.cols(); }
};

enum class CorruptionKind { kNone, kBandShift, kRandomFlip };

// band_shift: y += shift on the slab |v.x| <= tau.
// random_flip: with probability prob, y = sigma(w*.x) - shift * sgn(w*.x), sgn(0) = +1.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kNone;
  double tau = 0.0;
  double shift = 0.0;
  double prob = 0.0;
  std::optional<Vector> direction;  // band direction; unit norm
};

// Exact L(w*) under the corruption. The band probability 2 Phi(tau) - 1 holds for any unit v.
double certificate_loss(const CorruptionSpec& corruption);

CorruptionSpec parse_corruption(const std::string& text);  // none | band:tau=..,s=.. | flip:p=..,s=..
std::string corruption_shorthand(const CorruptionSpec& corruption);

// Seeded unit vector orthogonal to w*, used when a band corruption has no explicit direction.
Vector default_band_direction(const Vector& w_star, std::uint64_t seed);

struct GeneratedBatch {
  SampleBatch batch;
  double certificate_loss = 0.0;
  std::optional<Vector> direction;
};

constexpr Index kGenerateChunk = 4096;

// x ~ N(0, I_d), y = sigma(w*.x) then corrupted. Rows are drawn in fixed-size chunks, each from its own derived
// stream, so the output depends only on the arguments.
GeneratedBatch generate(Index d, Index n, const Activation& act, const Vector& w_star,
                        const CorruptionSpec& corruption, std::uint64_t seed);

// x~ = rho x + sqrt(1 - rho^2) z with m fresh replicates per row; labels copied.
SampleBatch augment(const SampleBatch& batch, double rho, Index m, std::uint64_t seed);

SampleBatch truncate_batch_labels(const SampleBatch& batch, double B);

// mean (sigma(w.x) - y)^2 with its standard error.
Estimate empirical_loss(const Activation& act, const Vector& w, const SampleBatch& batch);

// Throws kNonUnitVector unless | ||w|| - 1 | <= tol.
void require_unit(const Vector& w, double tol = 1e-12);

}  // namespace sgdva
