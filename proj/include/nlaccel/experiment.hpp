#pragma once

// Reproducible experiments: JSON configuration, per-trial data synthesis,
// plain and accelerated runs on identical data, mean curves, sweeps and the
// named figure presets.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlaccel/metrics.hpp"
#include "nlaccel/solvers.hpp"

namespace nlaccel {

enum class ExperimentKind { im1d, im2d, imat, imati, chebyshev, sl0, irls, admm };

std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct SignalParams {
  Index length = 500;           // 1-D signals and SL0
  double osr = 8.0;
  double loss_rate = 1.0 / 3.0;
  int dims = 0;                 // 1 or 2 for imat/imati/chebyshev; 0 picks the kind default
  std::optional<std::string> image;  // PGM path; procedural texture when unset
  Index height = 256;
  Index width = 256;
  double p_nz = 0.05;
  double sigma_off = 0.0;
  bool fixed_support = false;
  Index n = 200;                // IRLS/ADMM unknowns
  double m_over_n = 0.75;
};

struct HostParams {
  double lambda = 1.0;          // IM/IMAT relaxation
  double T0 = 1000.0;
  double threshold_decay = 1.0; // alpha of the threshold schedule
  std::optional<Transform> transform;
  double smoother_sigma = 2.0;
  double frame_A = 0.25;
  double frame_B = 0.6;
  std::optional<double> ca_rho;
  double lambda1 = 1.0;
  std::optional<double> sigma0;
  double sdf = 0.5;
  int outer = 8;
  int inner = 3;
  double mu0 = 2.0;
  SL0MnlMode mnl_mode = SL0MnlMode::inner;
  double irls_p = 0.0;
  double admm_rho = 0.8;
  double alpha_relax = 0.3;
  double lambda_reg_factor = 0.01;  // lambda_reg = factor * ||A^T b||_inf
  Index group_size = 1;
  Penalty penalty = Penalty::l1;
};

struct StabilizerSpec {
  std::string type;  // clip, substitute, median
  // Unset bounds are derived from the data (see auto_bounds).
  std::optional<double> lo;
  std::optional<double> hi;
  int window = 3;
};

struct AccelSettings {
  // Unset: feedback, except report-only for irls and admm.
  std::optional<AccelMode> mode;
  bool per_element = true;
  std::optional<double> epsilon;
  std::vector<StabilizerSpec> stabilizers{{"substitute", std::nullopt, std::nullopt, 3}};
};

struct SweepSpec {
  std::string parameter;  // dotted path, e.g. host.lambda
  std::vector<double> values;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::im1d;
  int trials = 1;
  uint64_t seed = 1;
  int iterations = 20;
  std::string output_dir = "out";
  SignalParams signal;
  HostParams host;
  AccelSettings accel;
  std::optional<SweepSpec> sweep;

  AccelMode effective_mode() const;
  int effective_dims() const;
};

/// Throws std::invalid_argument naming the offending field; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Sets a numeric field by dotted path and re-validates.
ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& path, double value);

struct TrialCurves {
  std::vector<MethodQuality> plain;
  std::vector<MethodQuality> mnl;
  bool plain_diverged = false;
  std::optional<int> plain_diverged_at;
  bool mnl_diverged = false;
  // Error norms ||estimate - reference|| per iteration.
  std::vector<double> plain_error;
  std::vector<double> mnl_error;
  // Image experiments only.
  std::optional<Image> reference;
  std::optional<Image> plain_image;
  std::optional<Image> mnl_image;
};

/// Runs trial `t` with RandomStream(seed, t). Curves have iterations+1
/// entries; truncated (diverged) runs hold their last value.
TrialCurves run_trial(const ExperimentConfig& cfg, int t);

struct RecoverResult {
  QualityReport report;  // means over trials
  std::vector<TrialCurves> trials;
};

/// threads == 0: hardware concurrency capped by NLACCEL_THREADS.
RecoverResult recover(const ExperimentConfig& cfg, unsigned threads = 0);

struct SweepRow {
  double value;
  MethodQuality plain;  // mean final metrics
  MethodQuality mnl;
};

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, unsigned threads = 0);
std::string sweep_csv(const ExperimentConfig& cfg, const std::vector<SweepRow>& rows);

/// Writes report CSV (and PGMs for image kinds) into cfg.output_dir under `stem`.
std::vector<std::filesystem::path> write_recover_outputs(const ExperimentConfig& cfg,
                                                         const RecoverResult& result,
                                                         const std::string& stem);

struct Preset {
  std::string label;
  ExperimentConfig config;
};

std::vector<std::string> preset_names();
/// Throws std::invalid_argument listing the known presets.
std::vector<Preset> figure_preset(const std::string& name);

// ---- parallel helpers -------------------------------------------------------

/// min(hardware concurrency, NLACCEL_THREADS when set), at least 1.
unsigned default_thread_count();
/// Calls fn(i) for i in [0, count) on up to `threads` workers; the first
/// exception is rethrown after all workers stop.
void parallel_for(size_t count, unsigned threads, const std::function<void(size_t)>& fn);

}  // namespace nlaccel
