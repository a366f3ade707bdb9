#include "nlaccel/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nlaccel/signals.hpp"

namespace nlaccel {

using nlohmann::json;

// ---- enum names -------------------------------------------------------------

namespace {

template <class E>
struct NameTable {
  std::vector<std::pair<E, const char*>> entries;

  const char* name(E e) const {
    for (const auto& [v, n] : entries) {
      if (v == e) return n;
    }
    throw std::logic_error("unnamed enum value");
  }
  std::optional<E> parse(const std::string& s) const {
    for (const auto& [v, n] : entries) {
      if (s == n) return v;
    }
    return std::nullopt;
  }
  std::string choices() const {
    std::string out;
    for (const auto& [v, n] : entries) out += (out.empty() ? "" : ", ") + std::string(n);
    return out;
  }
};

const NameTable<ExperimentKind> kKinds{{{ExperimentKind::im1d, "im1d"},
                                        {ExperimentKind::im2d, "im2d"},
                                        {ExperimentKind::imat, "imat"},
                                        {ExperimentKind::imati, "imati"},
                                        {ExperimentKind::chebyshev, "chebyshev"},
                                        {ExperimentKind::sl0, "sl0"},
                                        {ExperimentKind::irls, "irls"},
                                        {ExperimentKind::admm, "admm"}}};
const NameTable<Transform> kTransforms{{{Transform::dft, "dft"}, {Transform::dct, "dct"}}};
const NameTable<SL0MnlMode> kMnlModes{
    {{SL0MnlMode::off, "off"}, {SL0MnlMode::inner, "inner"}, {SL0MnlMode::outer, "outer"}}};
const NameTable<AccelMode> kAccelModes{
    {{AccelMode::report_only, "report_only"}, {AccelMode::feedback, "feedback"}}};
const NameTable<Penalty> kPenalties{{{Penalty::l1, "l1"}, {Penalty::group, "group"}}};

}  // namespace

std::string to_string(ExperimentKind k) { return kKinds.name(k); }

ExperimentKind parse_kind(const std::string& s) {
  if (auto k = kKinds.parse(s)) return *k;
  throw std::invalid_argument("unknown experiment kind '" + s + "' (expected " +
                              kKinds.choices() + ")");
}

AccelMode ExperimentConfig::effective_mode() const {
  if (accel.mode) return *accel.mode;
  return kind == ExperimentKind::irls || kind == ExperimentKind::admm ? AccelMode::report_only
                                                                      : AccelMode::feedback;
}

int ExperimentConfig::effective_dims() const {
  switch (kind) {
    case ExperimentKind::im2d: return 2;
    case ExperimentKind::imat:
    case ExperimentKind::imati:
    case ExperimentKind::chebyshev: return signal.dims == 0 ? 2 : signal.dims;
    default: return 1;
  }
}

// ---- JSON -------------------------------------------------------------------

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw std::invalid_argument("config: field '" + field + "' " + msg);
}

class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) {
      throw std::invalid_argument("config: '" + (prefix_.empty() ? std::string("<root>") : prefix_) +
                                  "' must be a JSON object");
    }
  }

  std::string field(const std::string& key) const { return prefix_ + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(key, j_.at(key));
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    if (j_.at(key).is_null()) {
      out.reset();
    } else {
      out = convert<T>(key, j_.at(key));
    }
  }

  template <class E>
  void get_enum(const std::string& key, const NameTable<E>& table, E& out) {
    std::string s;
    get(key, s);
    if (!j_.contains(key)) return;
    if (auto v = table.parse(s)) {
      out = *v;
    } else {
      field_error(field(key), "must be one of " + table.choices());
    }
  }

  template <class E>
  void get_enum(const std::string& key, const NameTable<E>& table, std::optional<E>& out) {
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      out.reset();
      return;
    }
    E v{};
    get_enum(key, table, v);
    out = v;
  }

  const json* sub(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw std::invalid_argument("config: unknown key '" + prefix_ + item.key() + "'");
      }
    }
  }

 private:
  template <class T>
  T convert(const std::string& key, const json& v) const {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) field_error(field(key), "must be a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) field_error(field(key), "must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
            field_error(field(key), "must be non-negative");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) field_error(field(key), "must be a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) field_error(field(key), "must be a string");
      }
      return v.get<T>();
    } catch (const json::exception&) {
      field_error(field(key), "has the wrong type");
    }
  }

  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) field_error(field, msg);
}

void validate(const ExperimentConfig& c) {
  check(c.trials >= 1, "trials", "must be >= 1");
  check(c.iterations >= 1, "iterations", "must be >= 1");
  const SignalParams& s = c.signal;
  check(s.length >= 2, "signal.length", "must be >= 2");
  check(s.osr >= 1.0, "signal.osr", "must be >= 1");
  check(s.loss_rate >= 0.0 && s.loss_rate < 1.0, "signal.loss_rate", "must lie in [0, 1)");
  check(s.dims == 0 || s.dims == 1 || s.dims == 2, "signal.dims", "must be 1 or 2");
  check(s.height >= 1 && s.width >= 1, "signal.height", "image dimensions must be >= 1");
  check(s.p_nz > 0.0 && s.p_nz < 1.0, "signal.p_nz", "must lie in (0, 1)");
  check(s.sigma_off >= 0.0, "signal.sigma_off", "must be >= 0");
  check(s.n >= 2, "signal.n", "must be >= 2");
  check(s.m_over_n > 0.0 && s.m_over_n <= 1.0, "signal.m_over_n", "must lie in (0, 1]");
  if (s.image) {
    check(std::filesystem::exists(*s.image), "signal.image", "file not found: " + *s.image);
  }
  const HostParams& h = c.host;
  check(h.lambda >= 0.0, "host.lambda", "must be >= 0");
  check(h.T0 >= 0.0, "host.T0", "must be >= 0");
  check(h.threshold_decay >= 0.0, "host.threshold_decay", "must be >= 0");
  check(h.smoother_sigma > 0.0, "host.smoother_sigma", "must be > 0");
  check(h.frame_A > 0.0 && h.frame_A <= h.frame_B, "host.frame_A", "must satisfy 0 < A <= B");
  check(h.sdf > 0.0 && h.sdf < 1.0, "host.sdf", "must lie in (0, 1)");
  check(h.outer >= 1, "host.outer", "must be >= 1");
  check(h.inner >= 1, "host.inner", "must be >= 1");
  check(h.mu0 > 0.0, "host.mu0", "must be > 0");
  check(h.irls_p >= 0.0 && h.irls_p < 1.0, "host.irls_p", "must lie in [0, 1)");
  check(h.admm_rho > 0.0, "host.admm_rho", "must be > 0");
  check(h.alpha_relax > 0.0 && h.alpha_relax < 2.0, "host.alpha_relax", "must lie in (0, 2)");
  check(h.lambda_reg_factor >= 0.0, "host.lambda_reg_factor", "must be >= 0");
  check(h.group_size >= 1, "host.group_size", "must be >= 1");
  if (h.penalty == Penalty::group) {
    check(s.n % h.group_size == 0, "host.group_size", "must divide signal.n");
  }
  for (size_t i = 0; i < c.accel.stabilizers.size(); ++i) {
    const auto& st = c.accel.stabilizers[i];
    const std::string f = "accel.stabilizers[" + std::to_string(i) + "]";
    check(st.type == "clip" || st.type == "substitute" || st.type == "median", f + ".type",
          "must be one of clip, substitute, median");
    if (st.lo && st.hi) check(*st.lo <= *st.hi, f + ".lo", "must not exceed hi");
    if (st.type == "median") check(st.window >= 3 && st.window % 2 == 1, f + ".window", "must be odd and >= 3");
  }
  if (c.accel.epsilon) check(*c.accel.epsilon >= 0.0, "accel.epsilon", "must be >= 0");
  if (c.sweep) {
    check(!c.sweep->parameter.empty(), "sweep.parameter", "must be set");
    check(!c.sweep->values.empty(), "sweep.values", "must be non-empty");
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  std::string kind = "im1d";
  root.get("kind", kind);
  c.kind = parse_kind(kind);
  root.get("trials", c.trials);
  root.get("seed", c.seed);
  root.get("iterations", c.iterations);
  root.get("output_dir", c.output_dir);

  if (const json* sj = root.sub("signal")) {
    Reader r(*sj, "signal.");
    SignalParams& s = c.signal;
    r.get("length", s.length);
    r.get("osr", s.osr);
    r.get("loss_rate", s.loss_rate);
    r.get("dims", s.dims);
    r.get("image", s.image);
    r.get("height", s.height);
    r.get("width", s.width);
    r.get("p_nz", s.p_nz);
    r.get("sigma_off", s.sigma_off);
    r.get("fixed_support", s.fixed_support);
    r.get("n", s.n);
    r.get("m_over_n", s.m_over_n);
    r.finish();
  }
  if (const json* hj = root.sub("host")) {
    Reader r(*hj, "host.");
    HostParams& h = c.host;
    r.get("lambda", h.lambda);
    r.get("T0", h.T0);
    r.get("threshold_decay", h.threshold_decay);
    r.get_enum("transform", kTransforms, h.transform);
    r.get("smoother_sigma", h.smoother_sigma);
    r.get("frame_A", h.frame_A);
    r.get("frame_B", h.frame_B);
    r.get("ca_rho", h.ca_rho);
    r.get("lambda1", h.lambda1);
    r.get("sigma0", h.sigma0);
    r.get("sdf", h.sdf);
    r.get("outer", h.outer);
    r.get("inner", h.inner);
    r.get("mu0", h.mu0);
    r.get_enum("mnl_mode", kMnlModes, h.mnl_mode);
    r.get("irls_p", h.irls_p);
    r.get("admm_rho", h.admm_rho);
    r.get("alpha_relax", h.alpha_relax);
    r.get("lambda_reg_factor", h.lambda_reg_factor);
    r.get("group_size", h.group_size);
    r.get_enum("penalty", kPenalties, h.penalty);
    r.finish();
  }
  if (const json* aj = root.sub("accel")) {
    Reader r(*aj, "accel.");
    AccelSettings& a = c.accel;
    r.get_enum("mode", kAccelModes, a.mode);
    r.get("per_element", a.per_element);
    r.get("epsilon", a.epsilon);
    if (const json* st = r.sub("stabilizers")) {
      if (!st->is_array()) field_error("accel.stabilizers", "must be an array");
      a.stabilizers.clear();
      for (size_t i = 0; i < st->size(); ++i) {
        Reader sr(st->at(i), "accel.stabilizers[" + std::to_string(i) + "].");
        StabilizerSpec spec;
        sr.get("type", spec.type);
        sr.get("lo", spec.lo);
        sr.get("hi", spec.hi);
        sr.get("window", spec.window);
        sr.finish();
        a.stabilizers.push_back(spec);
      }
    }
    r.finish();
  }
  if (const json* wj = root.sub("sweep")) {
    Reader r(*wj, "sweep.");
    SweepSpec sw;
    r.get("parameter", sw.parameter);
    r.get("values", sw.values);
    r.finish();
    c.sweep = sw;
  }
  root.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
  json j;
  j["kind"] = to_string(c.kind);
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["iterations"] = c.iterations;
  j["output_dir"] = c.output_dir;
  const SignalParams& s = c.signal;
  j["signal"] = {{"length", s.length},       {"osr", s.osr},
                 {"loss_rate", s.loss_rate}, {"dims", s.dims},
                 {"image", opt(s.image)},    {"height", s.height},
                 {"width", s.width},         {"p_nz", s.p_nz},
                 {"sigma_off", s.sigma_off}, {"fixed_support", s.fixed_support},
                 {"n", s.n},                 {"m_over_n", s.m_over_n}};
  const HostParams& h = c.host;
  j["host"] = {{"lambda", h.lambda},
               {"T0", h.T0},
               {"threshold_decay", h.threshold_decay},
               {"transform", h.transform ? json(kTransforms.name(*h.transform)) : json(nullptr)},
               {"smoother_sigma", h.smoother_sigma},
               {"frame_A", h.frame_A},
               {"frame_B", h.frame_B},
               {"ca_rho", opt(h.ca_rho)},
               {"lambda1", h.lambda1},
               {"sigma0", opt(h.sigma0)},
               {"sdf", h.sdf},
               {"outer", h.outer},
               {"inner", h.inner},
               {"mu0", h.mu0},
               {"mnl_mode", kMnlModes.name(h.mnl_mode)},
               {"irls_p", h.irls_p},
               {"admm_rho", h.admm_rho},
               {"alpha_relax", h.alpha_relax},
               {"lambda_reg_factor", h.lambda_reg_factor},
               {"group_size", h.group_size},
               {"penalty", kPenalties.name(h.penalty)}};
  json stabs = json::array();
  for (const auto& st : c.accel.stabilizers) {
    stabs.push_back({{"type", st.type}, {"lo", opt(st.lo)}, {"hi", opt(st.hi)}, {"window", st.window}});
  }
  j["accel"] = {{"mode", c.accel.mode ? json(kAccelModes.name(*c.accel.mode)) : json(nullptr)},
                {"per_element", c.accel.per_element},
                {"epsilon", opt(c.accel.epsilon)},
                {"stabilizers", stabs}};
  if (c.sweep) j["sweep"] = {{"parameter", c.sweep->parameter}, {"values", c.sweep->values}};
  return j;
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& path, double value) {
  json j = to_json(cfg);
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw std::invalid_argument("sweep: empty parameter path");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) {
      throw std::invalid_argument("sweep: unknown parameter '" + path + "'");
    }
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() || !node->contains(parts.back())) {
    throw std::invalid_argument("sweep: unknown parameter '" + path + "'");
  }
  json& leaf = (*node)[parts.back()];
  if (leaf.is_number_integer()) {
    if (value != std::floor(value)) {
      throw std::invalid_argument("sweep: parameter '" + path + "' takes integer values");
    }
    leaf = static_cast<long long>(value);
  } else if (leaf.is_number() || leaf.is_null()) {
    leaf = value;
  } else {
    throw std::invalid_argument("sweep: parameter '" + path + "' is not numeric");
  }
  return parse_config(j);
}

// ---- trials -----------------------------------------------------------------

namespace {

struct Problem {
  Vector truth;
  std::optional<Shape> image_shape;
  double lo = 0.0;
  double hi = 0.0;
  std::function<SolverRun(const RunOptions&)> run_plain;
  std::function<SolverRun(const RunOptions&)> run_mnl;
};

AccelHook make_hook(const ExperimentConfig& cfg, double lo, double hi, std::optional<Shape> grid) {
  AccelHook hook;
  hook.mode = cfg.effective_mode();
  hook.config.denominator_epsilon = cfg.accel.epsilon;
  hook.config.per_element_selection = cfg.accel.per_element;
  hook.config.grid = grid;
  for (const auto& st : cfg.accel.stabilizers) {
    if (st.type == "clip") {
      hook.config.policy.clip(st.lo.value_or(lo), st.hi.value_or(hi));
    } else if (st.type == "substitute") {
      hook.config.policy.substitute(st.lo.value_or(lo), st.hi.value_or(hi));
    } else {
      hook.config.policy.median(st.window);
    }
  }
  return hook;
}

// Shared Fourier bases; building one is O(N^2).
const Matrix& cached_basis(Index n) {
  static std::mutex m;
  static std::map<Index, std::shared_ptr<const Matrix>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const Matrix>(real_fourier_basis(n));
  return *slot;
}

Image trial_image(const ExperimentConfig& cfg, RandomStream& rng) {
  if (cfg.signal.image) return load_pgm(*cfg.signal.image);
  return gen_texture_image(cfg.signal.height, cfg.signal.width, rng);
}

std::pair<double, double> observed_range(const Vector& x, const MaskOperator& mask) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < x.size(); ++i) {
    if (mask.keep()[i]) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
    }
  }
  if (lo > hi) {
    lo = -x.cwiseAbs().maxCoeff();
    hi = -lo;
  }
  if (!(lo < hi)) {
    lo -= 1.0;
    hi += 1.0;
  }
  return {lo, hi};
}

// Signal and mask for the IM-family kinds. 2-D signals are images in [0, 255].
struct SampledSignal {
  Vector x;
  Shape shape;
  MaskOperator mask;
  double lo, hi;
};

SampledSignal sample_signal(const ExperimentConfig& cfg, RandomStream& rng) {
  if (cfg.effective_dims() == 2) {
    const Image img = trial_image(cfg, rng);
    const Shape shape = Shape::image(img.rows(), img.cols());
    MaskOperator mask = gen_mask(shape, cfg.signal.loss_rate, rng);
    return {flatten(img), shape, std::move(mask), 0.0, 255.0};
  }
  const Index L = cfg.signal.length;
  Vector x = gen_lp_signal(L, cfg.signal.osr, rng);
  MaskOperator mask = gen_mask(Shape::vector(L), cfg.signal.loss_rate, rng);
  const auto [lo, hi] = observed_range(x, mask);
  return {std::move(x), Shape::vector(L), std::move(mask), lo, hi};
}

LinearDistortion lowpass_after_mask(const SampledSignal& s, double osr) {
  const Index axis = s.shape.is_2d() ? std::min(s.shape.rows, s.shape.cols) : s.shape.rows;
  return compose(LowPassDFTFilter(s.shape, bandwidth_for_osr(axis, osr)), s.mask);
}

// SNR needs a nonzero reference; an empty support is redrawn from the same stream.
SparseSignal draw_nonzero_sparse(const SparseSpec& spec, RandomStream& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SparseSignal s = gen_sparse_signal(spec, rng);
    if (!s.coefficients.isZero()) return s;
  }
  throw std::invalid_argument("config: field 'signal.p_nz' too small to draw a nonzero sparse signal");
}

Problem build_problem(const ExperimentConfig& cfg, RandomStream& rng) {
  Problem p;
  const HostParams& h = cfg.host;
  const int iters = cfg.iterations;
  switch (cfg.kind) {
    case ExperimentKind::im1d:
    case ExperimentKind::im2d:
    case ExperimentKind::chebyshev: {
      auto s = std::make_shared<SampledSignal>(sample_signal(cfg, rng));
      const LinearDistortion G = lowpass_after_mask(*s, cfg.signal.osr);
      const Vector x0 = G(s->x);
      p.truth = s->x;
      if (s->shape.is_2d()) p.image_shape = s->shape;
      p.lo = s->lo;
      p.hi = s->hi;
      if (cfg.kind == ExperimentKind::chebyshev) {
        const CAConfig ca{h.frame_A, h.frame_B, iters, G, h.ca_rho, h.lambda1};
        p.run_plain = [ca, x0](const RunOptions& o) { return chebyshev_run(x0, ca, o); };
      } else {
        const IMConfig im{h.lambda, iters, G};
        p.run_plain = [im, x0](const RunOptions& o) { return run_im(x0, im, o); };
      }
      p.run_mnl = p.run_plain;
      return p;
    }
    case ExperimentKind::imat:
    case ExperimentKind::imati: {
      const SampledSignal s = sample_signal(cfg, rng);
      const LinearDistortion G = cfg.kind == ExperimentKind::imati
                                     ? make_imati_operator(s.mask, h.smoother_sigma)
                                     : LinearDistortion(s.mask);
      const Transform tr = h.transform.value_or(s.shape.is_2d() ? Transform::dct : Transform::dft);
      const IMATConfig im{h.lambda, h.T0, h.threshold_decay, tr, iters, G};
      const Vector x0 = G(s.x);
      p.truth = s.x;
      if (s.shape.is_2d()) p.image_shape = s.shape;
      p.lo = s.lo;
      p.hi = s.hi;
      p.run_plain = [im, x0](const RunOptions& o) { return run_imat(x0, im, o); };
      p.run_mnl = p.run_plain;
      return p;
    }
    case ExperimentKind::sl0: {
      SparseSpec spec{cfg.signal.length, cfg.signal.p_nz, cfg.signal.sigma_off, SparseDomain::dft,
                      cfg.signal.fixed_support};
      const SparseSignal sig = draw_nonzero_sparse(spec, rng);
      const MaskOperator mask = gen_mask(Shape::vector(spec.length), cfg.signal.loss_rate, rng);
      const Matrix& psi = cached_basis(spec.length);
      std::vector<Index> rows;
      for (Index i = 0; i < spec.length; ++i) {
        if (mask.keep()[i]) rows.push_back(i);
      }
      Matrix A(static_cast<Index>(rows.size()), spec.length);
      for (size_t r = 0; r < rows.size(); ++r) A.row(static_cast<Index>(r)) = psi.row(rows[r]);
      auto P = std::make_shared<const PseudoInverseProjector>(std::move(A));
      const Vector b = P->matrix() * sig.coefficients;
      const double bound = 2.0 * P->min_norm_solution(b).cwiseAbs().maxCoeff();
      p.truth = sig.coefficients;
      p.lo = -bound;
      p.hi = bound;
      SL0Config sl{h.sigma0, h.sdf, h.outer, h.inner, h.mu0, SL0MnlMode::off};
      p.run_plain = [P, b, sl](const RunOptions& o) { return sl0_run(*P, b, sl, o); };
      sl.mnl_mode = h.mnl_mode;
      p.run_mnl = [P, b, sl](const RunOptions& o) { return sl0_run(*P, b, sl, o); };
      return p;
    }
    case ExperimentKind::irls:
    case ExperimentKind::admm: {
      const Index n = cfg.signal.n;
      const Index m = std::max<Index>(1, std::llround(cfg.signal.m_over_n * static_cast<double>(n)));
      SparseSpec spec{n, cfg.signal.p_nz, cfg.signal.sigma_off, SparseDomain::identity,
                      cfg.signal.fixed_support};
      const SparseSignal sig = draw_nonzero_sparse(spec, rng);
      const Matrix A = gen_gaussian_matrix(m, n, rng);
      const Vector b = A * sig.coefficients;
      const PseudoInverseProjector P(A);
      const double bound = 2.0 * P.min_norm_solution(b).cwiseAbs().maxCoeff();
      p.truth = sig.coefficients;
      p.lo = -bound;
      p.hi = bound;
      if (cfg.kind == ExperimentKind::irls) {
        IRLSConfig ir;
        ir.iterations = iters;
        ir.p = h.irls_p;
        p.run_plain = [A, b, ir](const RunOptions& o) { return irls_run(A, b, ir, o); };
      } else {
        ADMMConfig ad;
        ad.rho = h.admm_rho;
        ad.alpha_relax = h.alpha_relax;
        ad.lambda_reg = h.lambda_reg_factor * (A.transpose() * b).cwiseAbs().maxCoeff();
        ad.group_size = h.group_size;
        ad.penalty = h.penalty;
        ad.iterations = iters;
        p.run_plain = [A, b, ad](const RunOptions& o) { return admm_lasso_run(A, b, ad, o); };
      }
      p.run_mnl = p.run_plain;
      return p;
    }
  }
  throw std::logic_error("unhandled experiment kind");
}

MethodQuality evaluate(const Vector& truth, const Vector& est, const std::optional<Shape>& shape) {
  MethodQuality q;
  q.snr_db = snr_db(truth, est);
  if (shape) {
    const Image a = unflatten(truth, *shape);
    const Image b = unflatten(est, *shape);
    q.psnr_db = psnr_db(a, b);
    if (est.allFinite()) {
      q.ssim = ssim(a, b);
      if (std::min(shape->rows, shape->cols) >= 176) q.ms_ssim = ms_ssim(a, b);
    }
  }
  return q;
}

void fill_curve(const SolverRun& run, const Problem& p, int iterations,
                std::vector<MethodQuality>& curve, std::vector<double>& errors) {
  curve.clear();
  errors.clear();
  for (int k = 0; k <= iterations; ++k) {
    const size_t idx = std::min(static_cast<size_t>(k), run.estimates.size() - 1);
    if (static_cast<size_t>(k) < run.estimates.size() || curve.empty()) {
      curve.push_back(evaluate(p.truth, run.estimates[idx], p.image_shape));
      errors.push_back((run.estimates[idx] - p.truth).norm());
    } else {
      curve.push_back(curve.back());
      errors.push_back(errors.back());
    }
  }
}

int curve_length(const ExperimentConfig& cfg) {
  return cfg.kind == ExperimentKind::sl0 ? cfg.host.outer : cfg.iterations;
}

Image to_pixels(const Vector& v, Shape shape) {
  Image img = unflatten(v, shape);
  for (Index i = 0; i < img.size(); ++i) {
    double& px = img.data()[i];
    px = std::isfinite(px) ? std::clamp(std::round(px), 0.0, 255.0) : 0.0;
  }
  return img;
}

}  // namespace

TrialCurves run_trial(const ExperimentConfig& cfg, int t) {
  RandomStream rng(cfg.seed, static_cast<uint64_t>(t));
  const Problem p = build_problem(cfg, rng);
  RunOptions plain_opts;
  plain_opts.reference = p.truth;
  RunOptions mnl_opts = plain_opts;
  mnl_opts.accel = make_hook(cfg, p.lo, p.hi, p.image_shape);

  const SolverRun plain = p.run_plain(plain_opts);
  const SolverRun mnl = p.run_mnl(mnl_opts);
  const int n = curve_length(cfg);

  TrialCurves out;
  fill_curve(plain, p, n, out.plain, out.plain_error);
  fill_curve(mnl, p, n, out.mnl, out.mnl_error);
  out.plain_diverged = plain.diverged;
  out.plain_diverged_at = plain.diverged_at;
  out.mnl_diverged = mnl.diverged;
  if (p.image_shape) {
    out.reference = to_pixels(p.truth, *p.image_shape);
    out.plain_image = to_pixels(plain.final_estimate(), *p.image_shape);
    out.mnl_image = to_pixels(mnl.final_estimate(), *p.image_shape);
  }
  return out;
}

namespace {

MethodQuality mean_of(const std::vector<const MethodQuality*>& qs) {
  MethodQuality m{0.0, 0.0, 0.0, 0.0};
  for (const MethodQuality* q : qs) {
    m.snr_db += q->snr_db;
    m.psnr_db += q->psnr_db;
    m.ssim += q->ssim;
    m.ms_ssim += q->ms_ssim;
  }
  const double n = static_cast<double>(qs.size());
  m.snr_db /= n;
  m.psnr_db /= n;
  m.ssim /= n;
  m.ms_ssim /= n;
  return m;
}

bool is_image_kind(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::sl0:
    case ExperimentKind::irls:
    case ExperimentKind::admm:
    case ExperimentKind::im1d: return false;
    default: return cfg.effective_dims() == 2;
  }
}

}  // namespace

RecoverResult recover(const ExperimentConfig& cfg, unsigned threads) {
  RecoverResult res;
  res.trials.resize(static_cast<size_t>(cfg.trials));
  parallel_for(res.trials.size(), threads, [&](size_t t) {
    TrialCurves c = run_trial(cfg, static_cast<int>(t));
    if (t > 0) {
      c.reference.reset();
      c.plain_image.reset();
      c.mnl_image.reset();
    }
    res.trials[t] = std::move(c);
  });
  res.report.image_metrics = is_image_kind(cfg);
  const size_t len = res.trials.front().plain.size();
  for (size_t k = 0; k < len; ++k) {
    std::vector<const MethodQuality*> plain, mnl;
    for (const auto& tr : res.trials) {
      plain.push_back(&tr.plain[k]);
      mnl.push_back(&tr.mnl[k]);
    }
    res.report.rows.push_back({static_cast<int>(k), mean_of(plain), mean_of(mnl)});
  }
  res.report.validate();
  return res;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, unsigned threads) {
  if (!cfg.sweep) throw std::invalid_argument("config: field 'sweep' is required for sweeps");
  std::vector<ExperimentConfig> points;
  for (double v : cfg.sweep->values) points.push_back(with_parameter(cfg, cfg.sweep->parameter, v));
  struct Final {
    MethodQuality plain, mnl;
  };
  std::vector<size_t> offsets;
  size_t total = 0;
  for (const auto& p : points) {
    offsets.push_back(total);
    total += static_cast<size_t>(p.trials);
  }
  std::vector<Final> finals(total);
  parallel_for(total, threads, [&](size_t task) {
    size_t gi = 0;
    while (gi + 1 < offsets.size() && offsets[gi + 1] <= task) ++gi;
    const int t = static_cast<int>(task - offsets[gi]);
    const TrialCurves c = run_trial(points[gi], t);
    finals[task] = {c.plain.back(), c.mnl.back()};
  });
  std::vector<SweepRow> rows;
  for (size_t gi = 0; gi < points.size(); ++gi) {
    std::vector<const MethodQuality*> plain, mnl;
    for (int t = 0; t < points[gi].trials; ++t) {
      plain.push_back(&finals[offsets[gi] + static_cast<size_t>(t)].plain);
      mnl.push_back(&finals[offsets[gi] + static_cast<size_t>(t)].mnl);
    }
    rows.push_back({cfg.sweep->values[gi], mean_of(plain), mean_of(mnl)});
  }
  return rows;
}

std::string sweep_csv(const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
  const bool img = is_image_kind(cfg);
  std::ostringstream os;
  os << (cfg.sweep ? cfg.sweep->parameter : std::string("value")) << ",snr_db_plain,snr_db_mnl";
  if (img) os << ",psnr_db_plain,psnr_db_mnl,ssim_plain,ssim_mnl,ms_ssim_plain,ms_ssim_mnl";
  os << "\n";
  for (const SweepRow& r : rows) {
    os << csv_number(r.value) << ',' << csv_number(r.plain.snr_db) << ',' << csv_number(r.mnl.snr_db);
    if (img) {
      os << ',' << csv_number(r.plain.psnr_db) << ',' << csv_number(r.mnl.psnr_db) << ','
         << csv_number(r.plain.ssim) << ',' << csv_number(r.mnl.ssim) << ','
         << csv_number(r.plain.ms_ssim) << ',' << csv_number(r.mnl.ms_ssim);
    }
    os << "\n";
  }
  return os.str();
}

std::vector<std::filesystem::path> write_recover_outputs(const ExperimentConfig& cfg,
                                                         const RecoverResult& result,
                                                         const std::string& stem) {
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto csv = dir / (stem + ".csv");
  {
    std::ofstream out(csv, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    result.report.write_csv(out);
  }
  written.push_back(csv);
  const TrialCurves& first = result.trials.front();
  if (first.reference) {
    const std::pair<const char*, const std::optional<Image>*> images[] = {
        {"_reference.pgm", &first.reference},
        {"_plain.pgm", &first.plain_image},
        {"_mnl.pgm", &first.mnl_image}};
    for (const auto& [suffix, img] : images) {
      const auto path = dir / (stem + suffix);
      save_pgm(**img, path);
      written.push_back(path);
    }
  }
  return written;
}

// ---- presets ----------------------------------------------------------------

namespace {

ExperimentConfig im1d_preset(double osr, double lr, double lambda) {
  ExperimentConfig c;
  c.kind = ExperimentKind::im1d;
  c.trials = 100;
  c.signal.length = 500;
  c.signal.osr = osr;
  c.signal.loss_rate = lr;
  c.host.lambda = lambda;
  c.accel.mode = AccelMode::report_only;
  c.accel.stabilizers = {{"substitute", std::nullopt, std::nullopt, 3}};
  return c;
}

ExperimentConfig sl0_preset(double lr, double p_nz, double sdf, double sigma_off) {
  ExperimentConfig c;
  c.kind = ExperimentKind::sl0;
  c.trials = 50;
  c.signal.length = 1000;
  c.signal.loss_rate = lr;
  c.signal.p_nz = p_nz;
  c.signal.sigma_off = sigma_off;
  c.host.sdf = sdf;
  c.host.mnl_mode = SL0MnlMode::inner;
  c.accel.mode = AccelMode::feedback;
  c.accel.stabilizers = {{"substitute", std::nullopt, std::nullopt, 3}};
  return c;
}

ExperimentConfig admm_preset(double rho) {
  ExperimentConfig c;
  c.kind = ExperimentKind::admm;
  c.trials = 100;
  c.iterations = 100;
  c.signal.n = 200;
  c.signal.m_over_n = 0.75;
  c.signal.p_nz = 0.05;
  c.host.alpha_relax = 0.3;
  c.host.admm_rho = rho;
  c.accel.mode = AccelMode::report_only;
  c.accel.stabilizers = {{"substitute", std::nullopt, std::nullopt, 3}};
  return c;
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"fig2",  "fig3",  "fig6",  "fig8",
                                          "fig10", "fig11", "fig12", "fig16"};
  return n;
}

}  // namespace

std::vector<std::string> preset_names() { return names(); }

std::vector<Preset> figure_preset(const std::string& name) {
  const StabilizerSpec clip_pixels{"clip", 0.0, 255.0, 3};
  if (name == "fig2") return {{"fig2", im1d_preset(8.0, 1.0 / 3.0, 2.2)}};
  if (name == "fig3") return {{"fig3", im1d_preset(4.0, 0.5, 2.0)}};
  if (name == "fig6") {
    ExperimentConfig c;
    c.kind = ExperimentKind::im2d;
    c.signal.osr = 4.0;
    c.signal.loss_rate = 2.0 / 3.0;
    c.host.lambda = 3.5;
    c.accel.mode = AccelMode::feedback;
    c.accel.stabilizers = {clip_pixels};
    return {{"fig6", c}};
  }
  if (name == "fig8") {
    ExperimentConfig c;
    c.kind = ExperimentKind::chebyshev;
    c.signal.dims = 2;
    c.signal.osr = 2.0;
    c.signal.loss_rate = 0.5;
    c.host.frame_A = 0.25;
    c.host.frame_B = 0.6;
    c.accel.mode = AccelMode::report_only;
    c.accel.stabilizers = {clip_pixels};
    return {{"fig8", c}};
  }
  if (name == "fig10") {
    return {{"fig10_lr30", sl0_preset(0.3, 0.05, 0.5, 0.01)},
            {"fig10_lr50", sl0_preset(0.5, 0.05, 0.5, 0.01)}};
  }
  if (name == "fig11") {
    return {{"fig11_sdf05", sl0_preset(0.3, 0.1, 0.5, 0.0)},
            {"fig11_sdf07", sl0_preset(0.3, 0.1, 0.7, 0.0)}};
  }
  if (name == "fig12") {
    return {{"fig12_rho08", admm_preset(0.8)}, {"fig12_rho05", admm_preset(0.5)}};
  }
  if (name == "fig16") {
    ExperimentConfig c;
    c.kind = ExperimentKind::imati;
    c.signal.dims = 2;
    c.signal.loss_rate = 0.3;
    c.host.smoother_sigma = 2.0;
    c.host.T0 = 1000.0;
    c.host.threshold_decay = 1.0;
    c.host.lambda = 3.5;
    c.host.transform = Transform::dct;
    c.accel.mode = AccelMode::feedback;
    c.accel.stabilizers = {clip_pixels};
    return {{"fig16", c}};
  }
  std::string list;
  for (const auto& n : names()) list += (list.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown preset '" + name + "' (known: " + list + ")");
}

}  // namespace nlaccel
