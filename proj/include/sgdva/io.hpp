#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sgdva/learner.hpp"
#include "sgdva/smoothing.hpp"

namespace sgdva {

// Binary batch layout: "SGDVABT1", u64 d, u64 n, u64 seed, n*d f64 row-major xs, n f64 ys. Little-endian.
inline constexpr char kBatchMagic[8] = {'S', 'G', 'D', 'V', 'A', 'B', 'T', '1'};

void save_batch(const std::string& path, const SampleBatch& batch);
SampleBatch load_batch(const std::string& path);
// Header x0..x{d-1},y
void export_batch_csv(const std::string& path, const SampleBatch& batch);

// rho,norm_sq,stderr
void write_norm_curve_csv(std::ostream& out, const SmoothedNormCurve& curve);
// theta,psi,stderr
void write_psi_curve_csv(std::ostream& out, const PsiCurve& curve);
// t,rho,eta,g_norm,emp_loss,angle
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace sgdva
