// Command-line front end: synthesis, recovery, sweeps, the convergence lab
// and the named figure presets. Exit code 0 on success; on failure a single
// diagnostic line on stderr and exit code 1.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nlaccel/convlab.hpp"
#include "nlaccel/experiment.hpp"
#include "nlaccel/signals.hpp"

namespace fs = std::filesystem;
using namespace nlaccel;

namespace {

// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string vector_text(const Vector& v) {
  std::string s;
  char buf[40];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v[i]);
    s += buf;
  }
  return s;
}

struct SynthArgs {
  std::string kind;
  long long len = 500;
  double osr = 8.0;
  double lr = 1.0 / 3.0;
  long long h = 256;
  long long w = 256;
  long long m = 100;
  long long n = 200;
  uint64_t seed = 1;
  uint64_t stream = 0;
  std::string out;
};

void cmd_synth(const SynthArgs& a) {
  RandomStream rng(a.seed, a.stream);
  if (a.kind == "lp") {
    emit(a.out, vector_text(gen_lp_signal(a.len, a.osr, rng)));
  } else if (a.kind == "mask") {
    const MaskOperator m = gen_mask(Shape::vector(a.len), a.lr, rng);
    std::string s;
    for (Index i = 0; i < m.keep().size(); ++i) s += m.keep()[i] ? "1\n" : "0\n";
    emit(a.out, s);
  } else if (a.kind == "matrix") {
    const Matrix A = gen_gaussian_matrix(a.m, a.n, rng);
    std::string s;
    char buf[40];
    for (Index i = 0; i < A.rows(); ++i) {
      for (Index j = 0; j < A.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%s%.17g", j ? "," : "", A(i, j));
        s += buf;
      }
      s += '\n';
    }
    emit(a.out, s);
  } else if (a.kind == "texture") {
    if (a.out.empty() || a.out == "-") throw std::invalid_argument("synth: texture needs --out <file.pgm>");
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    save_pgm(gen_texture_image(a.h, a.w, rng), a.out);
  } else {
    throw std::invalid_argument("synth: unknown kind '" + a.kind + "' (expected lp, mask, matrix, texture)");
  }
}

void notice_texture(const ExperimentConfig& cfg) {
  const bool image_kind = cfg.kind == ExperimentKind::im2d ||
                          ((cfg.kind == ExperimentKind::imat || cfg.kind == ExperimentKind::imati ||
                            cfg.kind == ExperimentKind::chebyshev) &&
                           cfg.effective_dims() == 2);
  if (image_kind && !cfg.signal.image) {
    std::cerr << "nlaccel: notice: no image given, using the procedural texture\n";
  }
}

void cmd_recover(const std::string& config, const std::string& out_dir, unsigned threads) {
  ExperimentConfig cfg = load_config(config);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  notice_texture(cfg);
  const RecoverResult res = recover(cfg, threads);
  for (const auto& p : write_recover_outputs(cfg, res, fs::path(config).stem().string())) {
    std::cout << p.string() << "\n";
  }
}

void cmd_sweep(const std::string& config, const std::string& out, unsigned threads) {
  const ExperimentConfig cfg = load_config(config);
  notice_texture(cfg);
  emit(out, sweep_csv(cfg, sweep(cfg, threads)));
}

void cmd_convlab(const std::string& out) {
  const auto rows = case_table(default_alpha_grid(), default_delta_fractions(), default_e2_values());
  std::ostringstream os;
  write_case_table_csv(os, rows, find_alpha_star());
  emit(out, os.str());
}

struct FigureArgs {
  std::string name;
  std::string image;
  std::string out_dir = "figures";
  std::optional<int> trials;
  std::optional<int> iterations;
  unsigned threads = 0;
};

void cmd_figures(const FigureArgs& a) {
  for (Preset& p : figure_preset(a.name)) {
    ExperimentConfig& cfg = p.config;
    cfg.output_dir = a.out_dir;
    if (!a.image.empty()) cfg.signal.image = a.image;
    if (a.trials) cfg.trials = *a.trials;
    if (a.iterations) cfg.iterations = *a.iterations;
    cfg = parse_config(to_json(cfg));  // validates overrides
    notice_texture(cfg);
    const RecoverResult res = recover(cfg, a.threads);
    for (const auto& path : write_recover_outputs(cfg, res, p.label)) {
      std::cout << path.string() << "\n";
    }
    std::ofstream(fs::path(a.out_dir) / (p.label + ".json")) << to_json(cfg).dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear acceleration of iterative recovery algorithms"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic signal, mask, matrix or texture");
  s->set_help_flag("--help", "Print this help message and exit");
  s->add_option("--kind", synth.kind, "lp, mask, matrix or texture")->required();
  s->add_option("--len", synth.len, "Signal length");
  s->add_option("--osr", synth.osr, "Oversampling ratio");
  s->add_option("--lr", synth.lr, "Loss rate");
  s->add_option("--h", synth.h, "Image height");
  s->add_option("--w", synth.w, "Image width");
  s->add_option("--m", synth.m, "Matrix rows");
  s->add_option("--n", synth.n, "Matrix columns");
  s->add_option("--seed", synth.seed, "Base seed");
  s->add_option("--stream", synth.stream, "Substream index");
  s->add_option("--out", synth.out, "Output file (stdout when omitted)");

  std::string config, out_dir, out;
  unsigned threads = 0;
  auto* r = app.add_subcommand("recover", "Run plain and accelerated recovery from a JSON config");
  r->add_option("config", config, "Experiment JSON")->required();
  r->add_option("--out-dir", out_dir, "Override output_dir");
  r->add_option("--threads", threads, "Worker threads (0 = auto)");

  auto* w = app.add_subcommand("sweep", "Mean final metrics over a parameter grid");
  w->add_option("config", config, "Experiment JSON with a sweep section")->required();
  w->add_option("--out", out, "Output CSV (stdout when omitted)");
  w->add_option("--threads", threads, "Worker threads (0 = auto)");

  auto* c = app.add_subcommand("convlab", "Tabulate the convergence cases and alpha*");
  c->add_option("--out", out, "Output CSV (stdout when omitted)");

  FigureArgs fig;
  int trials = 0, iterations = 0;
  auto* f = app.add_subcommand("figures", "Run a named figure preset");
  f->add_option("preset", fig.name, "Preset name")->required();
  f->add_option("--image", fig.image, "Grayscale PGM used instead of the procedural texture");
  f->add_option("--out-dir", fig.out_dir, "Output directory");
  auto* t_opt = f->add_option("--trials", trials, "Override the trial count");
  auto* i_opt = f->add_option("--iterations", iterations, "Override the iteration count");
  f->add_option("--threads", fig.threads, "Worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (s->parsed()) cmd_synth(synth);
    if (r->parsed()) cmd_recover(config, out_dir, threads);
    if (w->parsed()) cmd_sweep(config, out, threads);
    if (c->parsed()) cmd_convlab(out);
    if (f->parsed()) {
      if (t_opt->count()) fig.trials = trials;
      if (i_opt->count()) fig.iterations = iterations;
      cmd_figures(fig);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "nlaccel: error: " << msg << "\n";
    return 1;
  }
  return 0;
}
