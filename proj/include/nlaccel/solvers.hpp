#pragma once

// Host iterations accelerated by the NL/MNL combination. Each host exposes a
// single step where that makes sense and a run loop producing a SolverRun.

#include <optional>
#include <vector>

#include "nlaccel/accel.hpp"
#include "nlaccel/operators.hpp"

namespace nlaccel {

enum class AccelMode {
  report_only,  // the reported estimate is accelerated, the iteration is not
  feedback,     // the accelerated value replaces the running iterate
};

struct AccelHook {
  AccelConfig config;
  AccelMode mode = AccelMode::report_only;
};

struct RunOptions {
  std::optional<AccelHook> accel;
  // Ground truth used for divergence detection only.
  std::optional<Vector> reference;
  double divergence_factor = 1e6;
};

struct SolverRun {
  // Running iterates; trace[0] is the initial estimate.
  std::vector<Vector> trace;
  // Reported estimates, aligned with trace. Equal to trace without acceleration.
  std::vector<Vector> estimates;
  bool diverged = false;
  std::optional<int> diverged_at;
  // ADMM only, one entry per iteration: ||x - z|| and rho*||z - z_prev||.
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;

  int iterations() const { return static_cast<int>(trace.size()) - 1; }
  const Vector& final_estimate() const { return estimates.back(); }
};

// ---- IM -------------------------------------------------------------------

struct IMConfig {
  double lambda = 1.0;
  int iterations = 20;
  LinearDistortion G;
};

/// lambda*(x0 - G(x_prev)) + x_prev
Vector im_step(const Vector& x_prev, const Vector& x0, const IMConfig& cfg);
/// Starts from the observation x0.
SolverRun run_im(const Vector& x0, const IMConfig& cfg, const RunOptions& opts = {});

// ---- IMAT / IMATI -----------------------------------------------------------

struct IMATConfig {
  double lambda = 1.0;
  double T0 = 1.0;
  double alpha = 1.0;
  Transform transform = Transform::dct;
  int iterations = 20;
  LinearDistortion G;
};

/// T0 * exp(-alpha * k)
double threshold_schedule(int k, double T0, double alpha);

/// Thresholded IM update using T_k; k >= 1 is the index of the iterate produced.
Vector imat_step(const Vector& x_prev, const Vector& x0, int k, const IMATConfig& cfg);
SolverRun run_imat(const Vector& x0, const IMATConfig& cfg, const RunOptions& opts = {});
/// Same iteration as run_imat; cfg.G is expected to be smoother after mask.
SolverRun run_imati(const Vector& x0, const IMATConfig& cfg, const RunOptions& opts = {});
/// smoother(sigma) after mask, with the mask's shape.
LinearDistortion make_imati_operator(const MaskOperator& mask, double sigma);

// ---- Chebyshev acceleration -------------------------------------------------

struct CAConfig {
  double A = 0.25;
  double B = 0.6;
  int iterations = 20;
  LinearDistortion G;
  // Defaults to (B - A) / (A + B).
  std::optional<double> rho;
  double lambda1 = 1.0;

  double contraction() const { return rho.value_or((B - A) / (A + B)); }
};

SolverRun chebyshev_run(const Vector& x0, const CAConfig& cfg, const RunOptions& opts = {});

// ---- SL0 --------------------------------------------------------------------

enum class SL0MnlMode { off, inner, outer };

struct SL0Config {
  // Defaults to 2 * max |A+ b|.
  std::optional<double> sigma0;
  double sdf = 0.5;
  int outer = 8;
  int inner = 3;
  double mu0 = 2.0;
  SL0MnlMode mnl_mode = SL0MnlMode::off;
};

/// N - sum exp(-s^2 / (2 sigma^2))
double smoothed_l0(const Vector& s, double sigma);
/// (s / sigma^2) * exp(-s^2 / (2 sigma^2)), elementwise
Vector smoothed_l0_gradient(const Vector& s, double sigma);

/// trace[m] is the estimate after outer iteration m (trace[0] = A+ b).
/// Acceleration is active when cfg.mnl_mode != off and opts.accel is set.
/// Every recorded estimate is feasible. Throws std::invalid_argument when A
/// does not have full row rank.
SolverRun sl0_run(const PseudoInverseProjector& P, const Vector& b, const SL0Config& cfg,
                  const RunOptions& opts = {});
SolverRun sl0_run(const Matrix& A, const Vector& b, const SL0Config& cfg,
                  const RunOptions& opts = {});

// ---- IRLS -------------------------------------------------------------------

struct IRLSConfig {
  int iterations = 30;
  double p = 0.0;
  // Explicit epsilon per iteration. When empty: start at epsilon0 and halve
  // whenever the relative change drops below sqrt(eps)/100, floored at epsilon_min.
  std::vector<double> epsilons;
  double epsilon0 = 1.0;
  double epsilon_min = 1e-14;
};

/// Starts from A+ b. Throws std::runtime_error if A D A^T is singular.
SolverRun irls_run(const Matrix& A, const Vector& b, const IRLSConfig& cfg,
                   const RunOptions& opts = {});

// ---- ADMM -------------------------------------------------------------------

enum class Penalty { l1, group };

Vector soft_threshold(const Vector& v, double kappa);
/// Scales every K-block by max(1 - kappa/||block||, 0).
Vector block_soft_threshold(const Vector& v, double kappa, Index K);

struct ADMMConfig {
  double rho = 1.0;
  double alpha_relax = 1.0;
  double lambda_reg = 0.1;
  Index group_size = 1;
  Penalty penalty = Penalty::l1;
  int iterations = 100;
};

/// 0.5 ||Ax - b||^2 + lambda * (||x||_1 or sum of block 2-norms)
double lasso_objective(const Matrix& A, const Vector& b, const Vector& x, double lambda,
                       Penalty penalty = Penalty::l1, Index group_size = 1);

/// Trace of x-iterates starting at zero. Throws std::runtime_error when the
/// factorization of A^T A + rho I fails.
SolverRun admm_lasso_run(const Matrix& A, const Vector& b, const ADMMConfig& cfg,
                         const RunOptions& opts = {});

}  // namespace nlaccel
