#include "sgdva/synth.hpp"

#include <sstream>

namespace sgdva {

namespace {

constexpr std::uint64_t kBandStream = 0xba5d;

}  // namespace

double certificate_loss(const CorruptionSpec& c) {
  switch (c.kind) {
    case CorruptionKind::kNone: return 0.0;
    case CorruptionKind::kBandShift: return c.shift * c.shift * (2.0 * normal_cdf(c.tau) - 1.0);
    case CorruptionKind::kRandomFlip: return c.prob * c.shift * c.shift;
  }
  return 0.0;
}

CorruptionSpec parse_corruption(const std::string& text) {
  CorruptionSpec c;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::map<std::string, double> kv;
  if (colon != std::string::npos) {
    std::stringstream items(text.substr(colon + 1));
    std::string item;
    while (std::getline(items, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "corruption: expected key=value");
      try {
        kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "corruption: bad number in '" + item + "'");
      }
    }
  }
  auto take = [&](const char* key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const double v = it->second;
    kv.erase(it);
    return v;
  };
  if (kind == "none") {
    c.kind = CorruptionKind::kNone;
  } else if (kind == "band") {
    c.kind = CorruptionKind::kBandShift;
    c.tau = take("tau", 0.1);
    c.shift = take("s", 1.0);
    if (!(c.tau >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "corruption: tau must be >= 0");
  } else if (kind == "flip") {
    c.kind = CorruptionKind::kRandomFlip;
    c.prob = take("p", 0.05);
    c.shift = take("s", 2.0);
    if (!(c.prob >= 0.0 && c.prob <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "corruption: p outside [0, 1]");
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown corruption kind '" + kind + "'");
  }
  if (!kv.empty()) throw Error(ErrorCode::kInvalidArgument, "corruption: unknown key '" + kv.begin()->first + "'");
  return c;
}

std::string corruption_shorthand(const CorruptionSpec& c) {
  char buf[96];
  switch (c.kind) {
    case CorruptionKind::kNone: return "none";
    case CorruptionKind::kBandShift: std::snprintf(buf, sizeof buf, "band:tau=%.17g,s=%.17g", c.tau, c.shift); break;
    case CorruptionKind::kRandomFlip: std::snprintf(buf, sizeof buf, "flip:p=%.17g,s=%.17g", c.prob, c.shift); break;
  }
  return buf;
}

Vector default_band_direction(const Vector& w_star, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kBandStream));
  return random_orthogonal_unit(w_star, rng);
}

void require_unit(const Vector& w, double tol) {
  if (!(std::abs(w.norm() - 1.0) <= tol)) throw Error(ErrorCode::kNonUnitVector, "vector must have unit norm");
}

GeneratedBatch generate(Index d, Index n, const Activation& act, const Vector& w_star,
                        const CorruptionSpec& corruption, std::uint64_t seed) {
  if (d < 1 || n < 1) throw Error(ErrorCode::kInvalidArgument, "generate: d and n must be >= 1");
  if (w_star.size() != d) throw Error(ErrorCode::kInvalidArgument, "generate: w_star has the wrong dimension");
  require_unit(w_star);

  GeneratedBatch out;
  out.certificate_loss = certificate_loss(corruption);
  Vector v;
  if (corruption.kind == CorruptionKind::kBandShift) {
    v = corruption.direction ? *corruption.direction : default_band_direction(w_star, seed);
    if (v.size() != d) throw Error(ErrorCode::kInvalidArgument, "generate: band direction has the wrong dimension");
    require_unit(v, 1e-10);
    out.direction = v;
  }

  SampleBatch& b = out.batch;
  b.seed = seed;
  b.xs.resize(n, d);
  b.ys.resize(n);
  for (Index start = 0, chunk = 0; start < n; start += kGenerateChunk, ++chunk) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
    const Index stop = std::min(n, start + kGenerateChunk);
    for (Index i = start; i < stop; ++i) {
      for (Index j = 0; j < d; ++j) b.xs(i, j) = rng.normal();
      const double margin = b.xs.row(i).dot(w_star);
      double y = act.value(margin);
      switch (corruption.kind) {
        case CorruptionKind::kNone: break;
        case CorruptionKind::kBandShift:
          if (std::abs(b.xs.row(i).dot(v)) <= corruption.tau) y += corruption.shift;
          break;
        case CorruptionKind::kRandomFlip:
          if (rng.bernoulli(corruption.prob)) y -= corruption.shift * (margin >= 0.0 ? 1.0 : -1.0);
          break;
      }
      b.ys(i) = y;
    }
  }
  return out;
}

SampleBatch augment(const SampleBatch& batch, double rho, Index m, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::kInvalidArgument, "augment: rho must lie in (0, 1)");
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "augment: m must be >= 1");
  const double s = std::sqrt(1.0 - rho * rho);
  const Index n = batch.size(), d = batch.dim();
  SampleBatch out;
  out.seed = seed;
  out.xs.resize(n * m, d);
  out.ys.resize(n * m);
  const Index rows_per_chunk = std::max<Index>(1, kGenerateChunk / m);
  for (Index start = 0, chunk = 0; start < n; start += rows_per_chunk, ++chunk) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
    const Index stop = std::min(n, start + rows_per_chunk);
    for (Index i = start; i < stop; ++i)
      for (Index r = 0; r < m; ++r) {
        const Index row = i * m + r;
        for (Index j = 0; j < d; ++j) out.xs(row, j) = rho * batch.xs(i, j) + s * rng.normal();
        out.ys(row) = batch.ys(i);
      }
  }
  return out;
}

SampleBatch truncate_batch_labels(const SampleBatch& batch, double B) {
  SampleBatch out = batch;
  out.ys = batch.ys.unaryExpr([B](double y) { return truncate_labels(y, B); });
  return out;
}

Estimate empirical_loss(const Activation& act, const Vector& w, const SampleBatch& batch) {
  const Vector margins = batch.xs * w;
  MeanAccumulator acc;
  for (Index i = 0; i < batch.size(); ++i) {
    const double r = act.value(margins(i)) - batch.ys(i);
    acc.add(r * r);
  }
  return acc.estimate();
}

}  // namespace sgdva
