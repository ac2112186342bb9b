#include <gtest/gtest.h>

#include <filesystem>

#include "sgdva/io.hpp"
#include "support/oracles.hpp"

using namespace sgdva;

TEST(Synth, Certificates) {
  const CorruptionSpec band = parse_corruption("band:tau=0.1,s=1");
  EXPECT_NEAR(certificate_loss(band), 2 * oracle::cdf(0.1) - 1, 1e-14);
  EXPECT_NEAR(certificate_loss(band), 0.07966, 5e-6);
  EXPECT_NEAR(certificate_loss(parse_corruption("flip:p=0.05,s=2")), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(certificate_loss(parse_corruption("none")), 0.0);
  EXPECT_EQ(corruption_shorthand(parse_corruption("none")), "none");
  const CorruptionSpec back = parse_corruption(corruption_shorthand(band));
  EXPECT_EQ(back.tau, band.tau);
  EXPECT_EQ(back.shift, band.shift);
  EXPECT_THROW(parse_corruption("band:tau"), Error);
  EXPECT_THROW(parse_corruption("band:tau=x"), Error);
  EXPECT_THROW(parse_corruption("shuffle"), Error);
}

TEST(Synth, GenerateIsDeterministicAndChunked) {
  const Activation sig = builtin("sigmoid");
  const Vector w = Rng(1).unit_vector(5);
  const GeneratedBatch a = generate(5, 6000, sig, w, {}, 42);
  const GeneratedBatch b = generate(5, 6000, sig, w, {}, 42);
  EXPECT_EQ(a.batch.xs, b.batch.xs);
  EXPECT_EQ(a.batch.ys, b.batch.ys);
  const GeneratedBatch prefix = generate(5, 100, sig, w, {}, 42);
  EXPECT_EQ(prefix.batch.xs, a.batch.xs.topRows(100));
  const GeneratedBatch other = generate(5, 100, sig, w, {}, 43);
  EXPECT_NE(other.batch.xs, prefix.batch.xs);
  for (Index i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(a.batch.ys(i), oracle::sigmoid(a.batch.xs.row(i).dot(w)));
}

TEST(Synth, MarginalsAreStandardNormal) {
  const GeneratedBatch g = generate(3, 200000, builtin("identity"), Vector::Unit(3, 0), {}, 7);
  const Vector mean = g.batch.xs.colwise().mean();
  const Matrix cov = (g.batch.xs.rowwise() - mean.transpose()).transpose() * (g.batch.xs.rowwise() - mean.transpose()) / 200000.0;
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 0.015);
  EXPECT_LT((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Synth, CorruptionMatchesCertificate) {
  const Activation sig = builtin("sigmoid");
  const Vector w = Vector::Unit(4, 0);
  CorruptionSpec band = parse_corruption("band:tau=0.3,s=0.5");
  const GeneratedBatch g = generate(4, 200000, sig, w, band, 3);
  ASSERT_TRUE(g.direction.has_value());
  EXPECT_NEAR(g.direction->dot(w), 0.0, 1e-12);
  const Estimate loss = empirical_loss(sig, w, g.batch);
  EXPECT_LE(std::abs(loss.value - g.certificate_loss), 5 * loss.std_error);

  const GeneratedBatch f = generate(4, 200000, sig, w, parse_corruption("flip:p=0.1,s=1"), 3);
  const Estimate lf = empirical_loss(sig, w, f.batch);
  EXPECT_LE(std::abs(lf.value - 0.1), 5 * lf.std_error);
}

TEST(Synth, Augment) {
  SampleBatch b;
  b.xs = RowMatrix::Ones(2, 3);
  b.ys = (Vector(2) << 1.0, -1.0).finished();
  const SampleBatch a = augment(b, 0.6, 4, 9);
  ASSERT_EQ(a.size(), 8);
  EXPECT_DOUBLE_EQ(a.ys(3), 1.0);
  EXPECT_DOUBLE_EQ(a.ys(4), -1.0);
  const SampleBatch big = augment(b, 0.6, 100000, 9);
  const Vector m = big.xs.topRows(100000).colwise().mean();
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(m(j), 0.6, 0.01);
  const SampleBatch same = augment(b, 0.6, 4, 9);
  EXPECT_EQ(same.xs, a.xs);
}

TEST(Synth, UnitAndTruncation) {
  EXPECT_NO_THROW(require_unit(Vector::Unit(3, 1)));
  EXPECT_THROW(require_unit(Vector::Ones(3)), Error);
  SampleBatch b;
  b.xs = RowMatrix::Zero(3, 1);
  b.ys = (Vector(3) << -5.0, 0.2, 5.0).finished();
  const SampleBatch t = truncate_batch_labels(b, 1.0);
  EXPECT_EQ(t.ys, (Vector(3) << -1.0, 0.2, 1.0).finished());
}

TEST(Io, BatchRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "sgdva_io_test";
  std::filesystem::create_directories(dir);
  const GeneratedBatch g = generate(4, 50, builtin("relu"), Vector::Unit(4, 2), {}, 11);
  const std::string path = (dir / "b.bin").string();
  save_batch(path, g.batch);
  const SampleBatch back = load_batch(path);
  EXPECT_EQ(back.xs, g.batch.xs);
  EXPECT_EQ(back.ys, g.batch.ys);
  EXPECT_EQ(back.seed, g.batch.seed);
  EXPECT_EQ(std::filesystem::file_size(path), 8 + 3 * 8 + 50 * 5 * 8u);

  write_file(path, "NOTABATCH-------------------------");
  EXPECT_THROW(load_batch(path), Error);
  write_file(path, std::string(kBatchMagic, 8) + std::string(10, '\0'));
  EXPECT_THROW(load_batch(path), Error);

  const std::string csv = (dir / "b.csv").string();
  export_batch_csv(csv, g.batch);
  const std::string text = read_file(csv);
  EXPECT_EQ(text.substr(0, 14), "x0,x1,x2,x3,y\r");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 51);
  std::filesystem::remove_all(dir);
}

TEST(Io, CurveCsvSchemas) {
  PsiCurve c{(Vector(2) << 0.0, 0.5).finished(), (Vector(2) << 0.0, 0.25).finished(), Vector::Zero(2)};
  std::ostringstream out;
  write_psi_curve_csv(out, c);
  EXPECT_EQ(out.str(), "theta,psi,stderr\r\n0,0,0\r\n0.5,0.25,0\r\n");
  SmoothedNormCurve n{(Vector(1) << 0.5).finished(), (Vector(1) << 0.125).finished(), (Vector(1) << 0.001).finished(), {}, 0};
  std::ostringstream o2;
  write_norm_curve_csv(o2, n);
  EXPECT_EQ(o2.str(), "rho,norm_sq,stderr\r\n0.5,0.125,0.001\r\n");
  std::ostringstream o3;
  write_trace_csv(o3, {TraceRecord{0, 0.5, 0.1, 2.0, 0.3}});
  EXPECT_EQ(o3.str(), "t,rho,eta,g_norm,emp_loss,angle\r\n0,0.5,0.1,2,0.3,nan\r\n");
}
