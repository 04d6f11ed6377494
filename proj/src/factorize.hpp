#pragma once

// Internal: shared Cholesky-with-jitter policy. Not installed.

#include <Eigen/Core>

namespace perftx::detail {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Factorizes A (+ jitter * I) into L * L^T, escalating jitter from zero
/// through 1e-10 .. 1e-4 times trace/n. Returns false if every attempt fails.
bool chol_with_jitter(const Eigen::MatrixXd& A, double trace_over_n, Eigen::MatrixXd& L,
                      double& jitter);

} // namespace perftx::detail
