#include "sgdva/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sgdva {

namespace {

static_assert(std::endian::native == std::endian::little, "batch files assume a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error(ErrorCode::kIo, "batch file truncated");
  return v;
}

std::string fmt(const char* pattern, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

void save_batch(const std::string& path, const SampleBatch& batch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  out.write(kBatchMagic, sizeof kBatchMagic);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(batch.dim()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(batch.size()));
  put<std::uint64_t>(out, batch.seed);
  out.write(reinterpret_cast<const char*>(batch.xs.data()), static_cast<std::streamsize>(batch.xs.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(batch.ys.data()), static_cast<std::streamsize>(batch.ys.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

SampleBatch load_batch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kBatchMagic, sizeof magic) != 0) throw Error(ErrorCode::kIo, path + ": bad magic");
  const auto d = get<std::uint64_t>(in);
  const auto n = get<std::uint64_t>(in);
  SampleBatch b;
  b.seed = get<std::uint64_t>(in);
  if (d == 0 || n == 0 || d > (1ULL << 24) || n > (1ULL << 34) / d) throw Error(ErrorCode::kIo, path + ": bad header");
  b.xs.resize(static_cast<Index>(n), static_cast<Index>(d));
  b.ys.resize(static_cast<Index>(n));
  in.read(reinterpret_cast<char*>(b.xs.data()), static_cast<std::streamsize>(n * d * sizeof(double)));
  in.read(reinterpret_cast<char*>(b.ys.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error(ErrorCode::kIo, path + ": truncated payload");
  return b;
}

void export_batch_csv(const std::string& path, const SampleBatch& batch) {
  std::ostringstream out;
  for (Index j = 0; j < batch.dim(); ++j) out << 'x' << j << ',';
  out << "y\r\n";
  for (Index i = 0; i < batch.size(); ++i) {
    for (Index j = 0; j < batch.dim(); ++j) out << fmt("%.17g", batch.xs(i, j)) << ',';
    out << fmt("%.17g", batch.ys(i)) << "\r\n";
  }
  write_file(path, out.str());
}

void write_norm_curve_csv(std::ostream& out, const SmoothedNormCurve& curve) {
  out << "rho,norm_sq,stderr\r\n";
  for (Index i = 0; i < curve.rhos.size(); ++i)
    out << fmt("%.6g", curve.rhos(i)) << ',' << fmt("%.6g", curve.norms_sq(i)) << ','
        << fmt("%.6g", curve.std_errors(i)) << "\r\n";
}

void write_psi_curve_csv(std::ostream& out, const PsiCurve& curve) {
  out << "theta,psi,stderr\r\n";
  for (Index i = 0; i < curve.thetas.size(); ++i)
    out << fmt("%.6g", curve.thetas(i)) << ',' << fmt("%.6g", curve.psi(i)) << ','
        << fmt("%.6g", curve.std_errors(i)) << "\r\n";
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "t,rho,eta,g_norm,emp_loss,angle\r\n";
  for (const TraceRecord& r : trace)
    out << r.t << ',' << fmt("%.10g", r.rho) << ',' << fmt("%.10g", r.eta) << ',' << fmt("%.10g", r.g_norm) << ','
        << fmt("%.10g", r.emp_loss) << ',' << fmt("%.10g", r.angle) << "\r\n";
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sgdva
