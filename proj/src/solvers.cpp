#include "nlaccel/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nlaccel {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_same(const Vector& a, const Vector& b, const char* who) {
  require(a.size() == b.size(), std::string(who) + ": length mismatch");
}

// Shared bookkeeping: sliding-window acceleration, divergence detection and
// truncation.
class Loop {
 public:
  Loop(const RunOptions& opts, const Vector& init) : opts_(opts) {
    if (opts_.reference) {
      require_same(*opts_.reference, init, "reference");
      initial_error_ = (init - *opts_.reference).norm();
    }
    run_.trace.push_back(init);
    run_.estimates.push_back(init);
  }

  const Vector& current() const { return run_.trace.back(); }
  const Vector& previous() const { return run_.trace[run_.trace.size() - 2]; }
  size_t size() const { return run_.trace.size(); }

  // Returns the reported estimate for `next`; in feedback mode `next` itself
  // is replaced.
  Vector accelerate_next(Vector& next) const {
    if (!opts_.accel || run_.trace.size() < 3 || !next.allFinite()) return next;
    const size_t n = run_.trace.size();
    IterateWindow w{run_.trace[n - 3], run_.trace[n - 2], run_.trace[n - 1], next};
    Vector est = accelerate(w, opts_.accel->config);
    if (opts_.accel->mode == AccelMode::feedback) next = est;
    return est;
  }

  // False when the run must stop.
  bool record(int k, Vector running, Vector est) {
    if (!running.allFinite() || !est.allFinite()) {
      flag(k);
      return false;
    }
    run_.trace.push_back(std::move(running));
    run_.estimates.push_back(std::move(est));
    if (opts_.reference) {
      const double err = (run_.estimates.back() - *opts_.reference).norm();
      if (err > opts_.divergence_factor * initial_error_) {
        flag(k);
        return false;
      }
    }
    return true;
  }

  SolverRun& run() { return run_; }
  SolverRun finish() { return std::move(run_); }

 private:
  void flag(int k) {
    run_.diverged = true;
    run_.diverged_at = k;
  }

  const RunOptions& opts_;
  SolverRun run_;
  double initial_error_ = 0.0;
};

void check_iterations(int n) { require(n >= 1, "iterations must be >= 1"); }

}  // namespace

// ---- IM -------------------------------------------------------------------

Vector im_step(const Vector& x_prev, const Vector& x0, const IMConfig& cfg) {
  require_same(x_prev, x0, "im_step");
  require(x0.size() == cfg.G.shape().size(), "im_step: operator shape mismatch");
  return cfg.lambda * (x0 - cfg.G(x_prev)) + x_prev;
}

SolverRun run_im(const Vector& x0, const IMConfig& cfg, const RunOptions& opts) {
  check_iterations(cfg.iterations);
  require(cfg.lambda >= 0.0, "IM: lambda must be >= 0");
  Loop loop(opts, x0);
  for (int k = 1; k <= cfg.iterations; ++k) {
    Vector next = im_step(loop.current(), x0, cfg);
    Vector est = loop.accelerate_next(next);
    if (!loop.record(k, std::move(next), std::move(est))) break;
  }
  return loop.finish();
}

// ---- IMAT -----------------------------------------------------------------

double threshold_schedule(int k, double T0, double alpha) {
  return T0 * std::exp(-alpha * static_cast<double>(k));
}

Vector imat_step(const Vector& x_prev, const Vector& x0, int k, const IMATConfig& cfg) {
  require_same(x_prev, x0, "imat_step");
  const Shape shape = cfg.G.shape();
  require(x0.size() == shape.size(), "imat_step: operator shape mismatch");
  const Vector y = cfg.lambda * (x0 - cfg.G(x_prev)) + x_prev;
  return hard_threshold(y, shape, cfg.transform, threshold_schedule(k, cfg.T0, cfg.alpha));
}

SolverRun run_imat(const Vector& x0, const IMATConfig& cfg, const RunOptions& opts) {
  check_iterations(cfg.iterations);
  require(cfg.lambda >= 0.0, "IMAT: lambda must be >= 0");
  require(cfg.T0 >= 0.0 && cfg.alpha >= 0.0, "IMAT: T0 and alpha must be >= 0");
  Loop loop(opts, x0);
  for (int k = 1; k <= cfg.iterations; ++k) {
    Vector next = imat_step(loop.current(), x0, k, cfg);
    Vector est = loop.accelerate_next(next);
    if (!loop.record(k, std::move(next), std::move(est))) break;
  }
  return loop.finish();
}

SolverRun run_imati(const Vector& x0, const IMATConfig& cfg, const RunOptions& opts) {
  return run_imat(x0, cfg, opts);
}

LinearDistortion make_imati_operator(const MaskOperator& mask, double sigma) {
  return compose(GaussianSmoother(mask.shape(), sigma), mask);
}

// ---- CA -------------------------------------------------------------------

SolverRun chebyshev_run(const Vector& x0, const CAConfig& cfg, const RunOptions& opts) {
  check_iterations(cfg.iterations);
  require(cfg.A > 0.0 && cfg.A <= cfg.B, "CA: frame bounds must satisfy 0 < A <= B");
  require(x0.size() == cfg.G.shape().size(), "CA: operator shape mismatch");
  const double c = 2.0 / (cfg.A + cfg.B);
  const double rho = cfg.contraction();
  const Vector x1 = c * x0;
  Loop loop(opts, x0);
  double lam = cfg.lambda1;
  for (int k = 1; k <= cfg.iterations; ++k) {
    Vector next;
    if (k == 1) {
      next = x1;
    } else {
      lam = 1.0 / (1.0 - 0.25 * rho * rho * lam);
      const Vector& xm1 = loop.current();
      const Vector& xm2 = loop.previous();
      next = (x1 + xm1 - c * cfg.G(xm1) - xm2) * lam + xm2;
    }
    Vector est = loop.accelerate_next(next);
    if (!loop.record(k, std::move(next), std::move(est))) break;
  }
  return loop.finish();
}

// ---- SL0 ------------------------------------------------------------------

double smoothed_l0(const Vector& s, double sigma) {
  require(sigma > 0.0, "smoothed_l0: sigma must be positive");
  return static_cast<double>(s.size()) -
         (-s.array().square() / (2.0 * sigma * sigma)).exp().sum();
}

Vector smoothed_l0_gradient(const Vector& s, double sigma) {
  require(sigma > 0.0, "smoothed_l0_gradient: sigma must be positive");
  const double s2 = sigma * sigma;
  return (s.array() / s2 * (-s.array().square() / (2.0 * s2)).exp()).matrix();
}

SolverRun sl0_run(const PseudoInverseProjector& P, const Vector& b, const SL0Config& cfg,
                  const RunOptions& opts) {
  require(P.full_row_rank(), "SL0: A must have full row rank");
  require(b.size() == P.matrix().rows(), "SL0: b length does not match A");
  require(cfg.sdf > 0.0 && cfg.sdf < 1.0, "SL0: sdf must lie in (0, 1)");
  require(cfg.outer >= 1 && cfg.inner >= 1, "SL0: outer and inner counts must be >= 1");
  require(cfg.mu0 > 0.0, "SL0: mu0 must be positive");

  Vector s = P.min_norm_solution(b);
  const double sigma0 = cfg.sigma0.value_or(2.0 * s.cwiseAbs().maxCoeff());
  require(sigma0 > 0.0, "SL0: sigma0 must be positive (is b zero?)");
  const bool active = opts.accel && cfg.mnl_mode != SL0MnlMode::off;
  const bool feedback = active && opts.accel->mode == AccelMode::feedback;

  RunOptions loop_opts = opts;
  loop_opts.accel.reset();  // windows are assembled here, not by the loop
  Loop loop(loop_opts, s);
  double sigma = sigma0;
  for (int m = 1; m <= cfg.outer; ++m) {
    std::vector<Vector> window{s};
    for (int k = 0; k < cfg.inner; ++k) {
      // Gradient step scaled by sigma^2 so the step size does not depend on sigma.
      s = s - cfg.mu0 * (sigma * sigma) * smoothed_l0_gradient(s, sigma);
      s = P.project(s, b);
      window.push_back(s);
    }
    Vector est = s;
    if (active) {
      std::optional<IterateWindow> w;
      const size_t n = window.size();
      if (cfg.mnl_mode == SL0MnlMode::inner && n >= 4) {
        w = IterateWindow{window[n - 4], window[n - 3], window[n - 2], window[n - 1]};
      } else if (cfg.mnl_mode == SL0MnlMode::outer && loop.size() >= 3) {
        const auto& t = loop.run().trace;
        const size_t q = t.size();
        w = IterateWindow{t[q - 3], t[q - 2], t[q - 1], s};
      }
      if (w) {
        est = P.project(accelerate(*w, opts.accel->config), b);
        if (feedback) s = est;
      }
    }
    if (!loop.record(m, s, est)) break;
    sigma *= cfg.sdf;
  }
  return loop.finish();
}

SolverRun sl0_run(const Matrix& A, const Vector& b, const SL0Config& cfg,
                  const RunOptions& opts) {
  return sl0_run(PseudoInverseProjector(A), b, cfg, opts);
}

// ---- IRLS -----------------------------------------------------------------

SolverRun irls_run(const Matrix& A, const Vector& b, const IRLSConfig& cfg,
                   const RunOptions& opts) {
  check_iterations(cfg.iterations);
  require(A.rows() <= A.cols(), "IRLS: requires m <= n");
  require(b.size() == A.rows(), "IRLS: b length does not match A");
  require(cfg.p >= 0.0 && cfg.p < 1.0, "IRLS: p must lie in [0, 1)");
  for (double e : cfg.epsilons) require(e > 0.0, "IRLS: epsilons must be positive");
  require(cfg.epsilon0 > 0.0 && cfg.epsilon_min > 0.0, "IRLS: epsilons must be positive");

  const PseudoInverseProjector P(A);
  Loop loop(opts, P.min_norm_solution(b));
  double eps = cfg.epsilons.empty() ? cfg.epsilon0 : cfg.epsilons.front();
  for (int k = 1; k <= cfg.iterations; ++k) {
    if (!cfg.epsilons.empty()) {
      eps = cfg.epsilons[std::min(static_cast<size_t>(k - 1), cfg.epsilons.size() - 1)];
    }
    const Vector& prev = loop.current();
    const Vector d = (prev.array().square() + eps).pow(1.0 - cfg.p / 2.0).matrix();
    const Matrix AD = A * d.asDiagonal();
    const Matrix M = AD * A.transpose();
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("IRLS: weighted system A D A^T is singular");
    }
    Vector next = AD.transpose() * llt.solve(b);
    if (!next.allFinite()) throw std::runtime_error("IRLS: non-finite weighted solution");
    if (cfg.epsilons.empty()) {
      const double rel = (next - prev).norm() / std::max(prev.norm(), 1e-300);
      while (rel < std::sqrt(eps) / 100.0 && eps > cfg.epsilon_min) eps = std::max(eps / 2.0, cfg.epsilon_min);
    }
    Vector est = loop.accelerate_next(next);
    if (!loop.record(k, std::move(next), std::move(est))) break;
  }
  return loop.finish();
}

// ---- ADMM -----------------------------------------------------------------

Vector soft_threshold(const Vector& v, double kappa) {
  require(kappa >= 0.0, "soft_threshold: kappa must be >= 0");
  return (v.array().sign() * (v.array().abs() - kappa).max(0.0)).matrix();
}

Vector block_soft_threshold(const Vector& v, double kappa, Index K) {
  require(kappa >= 0.0, "block_soft_threshold: kappa must be >= 0");
  require(K >= 1 && v.size() % K == 0, "block_soft_threshold: length must be divisible by K");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); i += K) {
    const double nrm = v.segment(i, K).norm();
    const double scale = nrm > 0.0 ? std::max(1.0 - kappa / nrm, 0.0) : 0.0;
    out.segment(i, K) = scale * v.segment(i, K);
  }
  return out;
}

namespace {

double penalty_value(const Vector& x, Penalty penalty, Index K) {
  if (penalty == Penalty::l1) return x.lpNorm<1>();
  double acc = 0.0;
  for (Index i = 0; i < x.size(); i += K) acc += x.segment(i, K).norm();
  return acc;
}

}  // namespace

double lasso_objective(const Matrix& A, const Vector& b, const Vector& x, double lambda,
                       Penalty penalty, Index group_size) {
  require(A.cols() == x.size() && A.rows() == b.size(), "lasso_objective: dimension mismatch");
  return 0.5 * (A * x - b).squaredNorm() + lambda * penalty_value(x, penalty, group_size);
}

SolverRun admm_lasso_run(const Matrix& A, const Vector& b, const ADMMConfig& cfg,
                         const RunOptions& opts) {
  check_iterations(cfg.iterations);
  require(b.size() == A.rows(), "ADMM: b length does not match A");
  require(cfg.rho > 0.0, "ADMM: rho must be positive");
  require(cfg.alpha_relax > 0.0 && cfg.alpha_relax < 2.0, "ADMM: alpha_relax must lie in (0, 2)");
  require(cfg.lambda_reg >= 0.0, "ADMM: lambda_reg must be >= 0");
  const Index n = A.cols();
  if (cfg.penalty == Penalty::group) {
    require(cfg.group_size >= 1 && n % cfg.group_size == 0,
            "ADMM: n must be divisible by the group size");
  }

  Matrix H = A.transpose() * A;
  H.diagonal().array() += cfg.rho;
  const Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("ADMM: factorization of A^T A + rho I failed");
  }
  const Vector Atb = A.transpose() * b;
  const double kappa = cfg.lambda_reg / cfg.rho;

  Vector z = Vector::Zero(n);
  Vector u = Vector::Zero(n);
  Loop loop(opts, Vector::Zero(n));
  for (int k = 1; k <= cfg.iterations; ++k) {
    Vector x = llt.solve(Atb + cfg.rho * (z - u));
    Vector est = loop.accelerate_next(x);
    const Vector xh = cfg.alpha_relax * x + (1.0 - cfg.alpha_relax) * z;
    const Vector z_prev = z;
    z = cfg.penalty == Penalty::l1 ? soft_threshold(xh + u, kappa)
                                   : block_soft_threshold(xh + u, kappa, cfg.group_size);
    u += xh - z;
    loop.run().primal_residuals.push_back((x - z).norm());
    loop.run().dual_residuals.push_back(cfg.rho * (z - z_prev).norm());
    if (!loop.record(k, std::move(x), std::move(est))) break;
  }
  return loop.finish();
}

}  // namespace nlaccel
