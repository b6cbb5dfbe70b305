#pragma once

// Batch-run configuration: a flat key = value format with section prefixes
// (solver.dt, chaos.order, ...), named experiment presets carrying the
// reference parameter sets, emit/parse round-tripping, and fail-closed
// validation that names the offending field.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkap {

// Raised for malformed input, unknown keys, and invariant violations; the CLI
// maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Experiment { kTest1a, kTest1b, kTest2a, kTest2b, kTest2c, kTest2d, kDecay, kCustom };
enum class RecombKind { kGauss, kNone };
enum class DopingKind { kChannel, kZero };
enum class InitialKind { kEquilibrium, kSineDensity, kPerturbed };

struct RunConfig {
  Experiment experiment = Experiment::kCustom;

  // solver.*: deterministic kinetic discretization
  double epsilon = 1e-3;
  int n_cells = 100;
  int n_v = 20;
  double dt = 2e-6;
  double t_final = 0.01;
  double beta = 0.9;
  double gamma = 0.002;
  double phi_left = 0.0;
  double phi_right = 5.0;

  // chaos.*: polynomial expansion and collocation
  int order = 4;     // number of chaos modes K
  int n_colloc = 16; // collocation nodes (decay: z sample nodes)
  int n_z_quad = 16; // quadrature nodes for tensor / projection integrals

  // model.*: kernels, doping, initial data
  double sigma_base = 2.0;  // sigma_i(z) = sigma_base + sigma_slope * z
  double sigma_slope = 0.0;
  RecombKind recomb = RecombKind::kGauss;
  DopingKind doping = DopingKind::kChannel;
  double doping_slope = 0.0; // c(x,z) = c(x) * (1 + doping_slope * z)
  InitialKind initial = InitialKind::kEquilibrium;
  double perturb_amplitude = 1e-3; // decay experiment only

  // dd.*: drift-diffusion reference discretization (test1b)
  int dd_n_cells = 200;
  int dd_n_v = 32;
  double dd_dt = 2e-6;

  // run.*: execution and artifact control
  unsigned seed = 1;
  int n_outputs = 50;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;
};

// --- enum <-> token maps ----------------------------------------------------

inline const char* to_token(Experiment e) {
  switch (e) {
    case Experiment::kTest1a: return "test1a";
    case Experiment::kTest1b: return "test1b";
    case Experiment::kTest2a: return "test2a";
    case Experiment::kTest2b: return "test2b";
    case Experiment::kTest2c: return "test2c";
    case Experiment::kTest2d: return "test2d";
    case Experiment::kDecay: return "decay";
    case Experiment::kCustom: return "custom";
  }
  return "custom";
}

inline const char* to_token(RecombKind k) { return k == RecombKind::kGauss ? "gauss" : "none"; }
inline const char* to_token(DopingKind k) { return k == DopingKind::kChannel ? "channel" : "zero"; }
inline const char* to_token(InitialKind k) {
  switch (k) {
    case InitialKind::kEquilibrium: return "equilibrium";
    case InitialKind::kSineDensity: return "sine_density";
    case InitialKind::kPerturbed: return "perturbed";
  }
  return "equilibrium";
}

inline Experiment experiment_from_token(const std::string& s) {
  for (Experiment e : {Experiment::kTest1a, Experiment::kTest1b, Experiment::kTest2a,
                       Experiment::kTest2b, Experiment::kTest2c, Experiment::kTest2d,
                       Experiment::kDecay, Experiment::kCustom})
    if (s == to_token(e)) return e;
  throw ConfigError("experiment: unknown value '" + s +
                    "' (expected test1a|test1b|test2a|test2b|test2c|test2d|decay|custom)");
}

inline RecombKind recomb_from_token(const std::string& s) {
  if (s == "gauss") return RecombKind::kGauss;
  if (s == "none") return RecombKind::kNone;
  throw ConfigError("model.recomb: unknown value '" + s + "' (expected gauss|none)");
}

inline DopingKind doping_from_token(const std::string& s) {
  if (s == "channel") return DopingKind::kChannel;
  if (s == "zero") return DopingKind::kZero;
  throw ConfigError("model.doping: unknown value '" + s + "' (expected channel|zero)");
}

inline InitialKind initial_from_token(const std::string& s) {
  if (s == "equilibrium") return InitialKind::kEquilibrium;
  if (s == "sine_density") return InitialKind::kSineDensity;
  if (s == "perturbed") return InitialKind::kPerturbed;
  throw ConfigError("model.initial: unknown value '" + s +
                    "' (expected equilibrium|sine_density|perturbed)");
}

// --- presets ----------------------------------------------------------------

inline std::vector<std::string> preset_names() {
  return {"test1a", "test1b", "test2a", "test2b", "test2c", "test2d", "decay", "custom"};
}

inline std::string preset_description(Experiment e) {
  switch (e) {
    case Experiment::kTest1a:
      return "deterministic device run; time series of the L1 distance to local equilibrium";
    case Experiment::kTest1b:
      return "vanishing-Knudsen device run compared against the drift-diffusion reference";
    case Experiment::kTest2a:
      return "random doping profile and collision kernels; chaos vs collocation statistics";
    case Experiment::kTest2b:
      return "random collision kernels only; chaos vs collocation statistics";
    case Experiment::kTest2c:
      return "random initial density; chaos vs collocation statistics";
    case Experiment::kTest2d:
      return "expansion-order convergence study against a collocation reference";
    case Experiment::kDecay:
      return "periodic zero-field relaxation of a random perturbation; fitted decay rate";
    case Experiment::kCustom:
      return "deterministic single run with user-supplied parameters";
  }
  return "";
}

// Reference parameter sets for the named experiments.  The device runs share
// the channel doping profile, sigma = 2, the Gaussian generation-
// recombination kernel, beta = 0.9, gamma = 0.002, potential drop 0 -> 5,
// dx = 0.01 (100 cells), N_v = 20 and dt = 2e-6.
inline RunConfig preset_config(Experiment e) {
  RunConfig c; // defaults above equal the shared device base
  c.experiment = e;
  c.output_dir = std::string("out/") + to_token(e);
  switch (e) {
    case Experiment::kTest1a:
      c.t_final = 0.01;
      break;
    case Experiment::kTest1b:
      c.epsilon = 1e-5;
      c.t_final = 0.2;
      break;
    case Experiment::kTest2a:
      c.t_final = 0.1;
      c.sigma_slope = 1.0;
      c.doping_slope = 0.5;
      break;
    case Experiment::kTest2b:
      c.t_final = 0.1;
      c.sigma_slope = 0.5;
      c.n_v = 16;
      break;
    case Experiment::kTest2c:
      c.t_final = 0.1;
      c.initial = InitialKind::kSineDensity;
      break;
    case Experiment::kTest2d:
      c.t_final = 0.005;
      c.order = 5; // study runs K = 1..order
      c.sigma_slope = 1.0;
      c.doping_slope = 0.5;
      break;
    case Experiment::kDecay:
      c.epsilon = 1e-2;
      c.beta = 1.0;
      c.n_cells = 32;
      c.n_v = 16;
      // Stability of the split scheme at these mesh parameters requires
      // dt <= ~2e-4; see DecayConfig in uq_harness.hpp.
      c.dt = 1e-4;
      c.t_final = 0.4;
      c.phi_left = 0.0;
      c.phi_right = 0.0;
      c.sigma_slope = 0.5;
      c.recomb = RecombKind::kNone;
      c.doping = DopingKind::kZero;
      c.initial = InitialKind::kPerturbed;
      c.n_colloc = 8;
      c.n_outputs = 80;
      break;
    case Experiment::kCustom:
      break;
  }
  return c;
}

inline RunConfig preset_config(const std::string& name) {
  return preset_config(experiment_from_token(name));
}

// --- emit -------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Serializes every key; parse(emit(c)) == c for any valid configuration.
inline std::string emit(const RunConfig& c) {
  std::ostringstream os;
  auto d = [](double v) { return detail::fmt_double(v); };
  os << "experiment = " << to_token(c.experiment) << "\n\n";
  os << "solver.epsilon = " << d(c.epsilon) << "\n";
  os << "solver.n_cells = " << c.n_cells << "\n";
  os << "solver.n_v = " << c.n_v << "\n";
  os << "solver.dt = " << d(c.dt) << "\n";
  os << "solver.t_final = " << d(c.t_final) << "\n";
  os << "solver.beta = " << d(c.beta) << "\n";
  os << "solver.gamma = " << d(c.gamma) << "\n";
  os << "solver.phi_left = " << d(c.phi_left) << "\n";
  os << "solver.phi_right = " << d(c.phi_right) << "\n\n";
  os << "chaos.order = " << c.order << "\n";
  os << "chaos.n_colloc = " << c.n_colloc << "\n";
  os << "chaos.n_z_quad = " << c.n_z_quad << "\n\n";
  os << "model.sigma_base = " << d(c.sigma_base) << "\n";
  os << "model.sigma_slope = " << d(c.sigma_slope) << "\n";
  os << "model.recomb = " << to_token(c.recomb) << "\n";
  os << "model.doping = " << to_token(c.doping) << "\n";
  os << "model.doping_slope = " << d(c.doping_slope) << "\n";
  os << "model.initial = " << to_token(c.initial) << "\n";
  os << "model.perturb_amplitude = " << d(c.perturb_amplitude) << "\n\n";
  os << "dd.n_cells = " << c.dd_n_cells << "\n";
  os << "dd.n_v = " << c.dd_n_v << "\n";
  os << "dd.dt = " << d(c.dd_dt) << "\n\n";
  os << "run.seed = " << c.seed << "\n";
  os << "run.n_outputs = " << c.n_outputs << "\n";
  os << "run.output_dir = " << c.output_dir << "\n";
  return os.str();
}

// --- parse ------------------------------------------------------------------

struct KeyValue {
  std::string key, value;
  int line = 0;
};

// Syntax pass only: key = value lines, '#' comments, blank lines.
inline std::vector<KeyValue> parse_key_values(const std::string& text) {
  std::vector<KeyValue> out;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string stripped = detail::trim(raw.substr(0, raw.find('#')));
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                        stripped + "'");
    KeyValue kv;
    kv.key = detail::trim(stripped.substr(0, eq));
    kv.value = detail::trim(stripped.substr(eq + 1));
    kv.line = lineno;
    if (kv.key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

namespace detail {

inline double parse_double(const KeyValue& kv) {
  const char* s = kv.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw ConfigError(kv.key + ": expected a number, got '" + kv.value + "'");
  return v;
}

inline long parse_long(const KeyValue& kv) {
  const char* s = kv.value.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0')
    throw ConfigError(kv.key + ": expected an integer, got '" + kv.value + "'");
  return v;
}

inline int parse_int(const KeyValue& kv) { return static_cast<int>(parse_long(kv)); }

inline unsigned parse_unsigned(const KeyValue& kv) {
  const long v = parse_long(kv);
  if (v < 0) throw ConfigError(kv.key + ": expected a non-negative integer, got '" + kv.value + "'");
  return static_cast<unsigned>(v);
}

}  // namespace detail

// Applies one non-experiment key; unknown keys are rejected.
inline void apply_key(RunConfig& c, const KeyValue& kv) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_unsigned;
  const std::string& k = kv.key;
  if (k == "solver.epsilon") c.epsilon = parse_double(kv);
  else if (k == "solver.n_cells") c.n_cells = parse_int(kv);
  else if (k == "solver.n_v") c.n_v = parse_int(kv);
  else if (k == "solver.dt") c.dt = parse_double(kv);
  else if (k == "solver.t_final") c.t_final = parse_double(kv);
  else if (k == "solver.beta") c.beta = parse_double(kv);
  else if (k == "solver.gamma") c.gamma = parse_double(kv);
  else if (k == "solver.phi_left") c.phi_left = parse_double(kv);
  else if (k == "solver.phi_right") c.phi_right = parse_double(kv);
  else if (k == "chaos.order") c.order = parse_int(kv);
  else if (k == "chaos.n_colloc") c.n_colloc = parse_int(kv);
  else if (k == "chaos.n_z_quad") c.n_z_quad = parse_int(kv);
  else if (k == "model.sigma_base") c.sigma_base = parse_double(kv);
  else if (k == "model.sigma_slope") c.sigma_slope = parse_double(kv);
  else if (k == "model.recomb") c.recomb = recomb_from_token(kv.value);
  else if (k == "model.doping") c.doping = doping_from_token(kv.value);
  else if (k == "model.doping_slope") c.doping_slope = parse_double(kv);
  else if (k == "model.initial") c.initial = initial_from_token(kv.value);
  else if (k == "model.perturb_amplitude") c.perturb_amplitude = parse_double(kv);
  else if (k == "dd.n_cells") c.dd_n_cells = parse_int(kv);
  else if (k == "dd.n_v") c.dd_n_v = parse_int(kv);
  else if (k == "dd.dt") c.dd_dt = parse_double(kv);
  else if (k == "run.seed") c.seed = parse_unsigned(kv);
  else if (k == "run.n_outputs") c.n_outputs = parse_int(kv);
  else if (k == "run.output_dir") c.output_dir = kv.value;
  else throw ConfigError("unknown key '" + k + "' (line " + std::to_string(kv.line) + ")");
}

// Resolves key-value sources into a configuration: the experiment named by
// the preset argument and/or by 'experiment' keys selects the preset overlay,
// which is applied before all other keys (file keys first, then overrides).
// Conflicting experiment names are rejected rather than silently re-based.
inline RunConfig resolve_config(const std::optional<std::string>& preset_name,
                                const std::vector<KeyValue>& file_kvs,
                                const std::vector<KeyValue>& override_kvs) {
  // duplicate keys within the file are ambiguous; fail closed
  for (std::size_t i = 0; i < file_kvs.size(); ++i)
    for (std::size_t j = i + 1; j < file_kvs.size(); ++j)
      if (file_kvs[i].key == file_kvs[j].key)
        throw ConfigError("duplicate key '" + file_kvs[i].key + "' (lines " +
                          std::to_string(file_kvs[i].line) + " and " +
                          std::to_string(file_kvs[j].line) + ")");

  std::optional<std::string> chosen;
  auto claim = [&chosen](const std::string& name) {
    if (chosen && *chosen != name)
      throw ConfigError("experiment: conflicting values '" + *chosen + "' and '" + name + "'");
    if (!chosen) chosen = name;
  };
  if (preset_name) {
    experiment_from_token(*preset_name); // reject unknown names eagerly
    claim(*preset_name);
  }
  for (const auto* kvs : {&file_kvs, &override_kvs})
    for (const KeyValue& kv : *kvs)
      if (kv.key == "experiment") {
        experiment_from_token(kv.value);
        claim(kv.value);
      }

  RunConfig c = preset_config(chosen ? *chosen : std::string("custom"));
  for (const auto* kvs : {&file_kvs, &override_kvs})
    for (const KeyValue& kv : *kvs)
      if (kv.key != "experiment") apply_key(c, kv);
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  return resolve_config(std::nullopt, parse_key_values(text), {});
}

// --- validation -------------------------------------------------------------

// Checks every invariant and throws a ConfigError naming each violated field.
inline void validate_config(const RunConfig& c) {
  std::vector<std::string> bad;
  auto flag = [&bad](const std::string& msg) { bad.push_back(msg); };
  auto positive = [&](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v))
      flag(std::string(key) + ": must be positive and finite (got " + detail::fmt_double(v) + ")");
  };
  auto finite = [&](const char* key, double v) {
    if (!std::isfinite(v))
      flag(std::string(key) + ": must be finite (got " + detail::fmt_double(v) + ")");
  };
  auto at_least = [&](const char* key, int v, int lo) {
    if (v < lo)
      flag(std::string(key) + ": must be >= " + std::to_string(lo) + " (got " +
           std::to_string(v) + ")");
  };

  positive("solver.epsilon", c.epsilon);
  positive("solver.dt", c.dt);
  positive("solver.t_final", c.t_final);
  if (std::isfinite(c.dt) && std::isfinite(c.t_final) && c.dt > 0 && c.t_final > 0 &&
      c.t_final < 0.5 * c.dt)
    flag("solver.t_final: must cover at least one step of solver.dt");
  positive("solver.beta", c.beta);
  positive("solver.gamma", c.gamma);
  finite("solver.phi_left", c.phi_left);
  finite("solver.phi_right", c.phi_right);
  at_least("solver.n_cells", c.n_cells, 4);
  at_least("solver.n_v", c.n_v, 4);
  if (c.n_v % 2 != 0)
    flag("solver.n_v: must be even so the velocity grid is reflection-symmetric (got " +
         std::to_string(c.n_v) + ")");

  at_least("chaos.order", c.order, 1);
  at_least("chaos.n_colloc", c.n_colloc, 1);
  at_least("chaos.n_z_quad", c.n_z_quad, 1);

  positive("model.sigma_base", c.sigma_base);
  finite("model.sigma_slope", c.sigma_slope);
  if (std::isfinite(c.sigma_base) && std::isfinite(c.sigma_slope) &&
      !(c.sigma_base - std::abs(c.sigma_slope) > 0.0))
    flag("model.sigma_slope: collision kernel must stay positive on z in [-1,1] "
         "(requires |slope| < base)");
  finite("model.doping_slope", c.doping_slope);
  if (!(c.perturb_amplitude >= 0.0) || !std::isfinite(c.perturb_amplitude))
    flag("model.perturb_amplitude: must be non-negative and finite");

  at_least("dd.n_cells", c.dd_n_cells, 4);
  at_least("dd.n_v", c.dd_n_v, 4);
  if (c.dd_n_v % 2 != 0)
    flag("dd.n_v: must be even so the velocity grid is reflection-symmetric (got " +
         std::to_string(c.dd_n_v) + ")");
  positive("dd.dt", c.dd_dt);
  if (c.experiment == Experiment::kTest1b && c.n_cells >= 1 && c.dd_n_cells >= 1 &&
      c.dd_n_cells % c.n_cells != 0)
    flag("dd.n_cells: must be an integer multiple of solver.n_cells so the reference "
         "restricts onto the kinetic grid");

  at_least("run.n_outputs", c.n_outputs, 1);
  if (c.output_dir.empty()) flag("run.output_dir: must not be empty");

  if (c.experiment == Experiment::kDecay) {
    if (c.recomb != RecombKind::kNone)
      flag("model.recomb: the decay experiment runs without generation-recombination "
           "(set 'none')");
    if (c.doping != DopingKind::kZero)
      flag("model.doping: the decay experiment is field-free and undoped (set 'zero')");
    if (c.initial != InitialKind::kPerturbed)
      flag("model.initial: the decay experiment requires 'perturbed'");
  } else if (c.initial == InitialKind::kPerturbed) {
    flag("model.initial: 'perturbed' is only available in the decay experiment");
  }

  if (!bad.empty()) {
    std::string msg = "invalid configuration: " + bad[0];
    for (std::size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
    throw ConfigError(msg);
  }
}

// --- CLI-facing assembly ----------------------------------------------------

// Builds a validated configuration from an optional preset name, an optional
// config file, --set key=value overrides (applied in order, after the file),
// and an optional output-directory override.
inline RunConfig assemble_config(const std::optional<std::string>& preset_name,
                                 const std::optional<std::string>& config_path,
                                 const std::vector<std::string>& set_pairs,
                                 const std::optional<std::string>& out_dir) {
  std::vector<KeyValue> file_kvs;
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw ConfigError("cannot read config file '" + *config_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    file_kvs = parse_key_values(ss.str());
  }
  std::vector<KeyValue> overrides;
  for (std::size_t i = 0; i < set_pairs.size(); ++i) {
    const std::string& pair = set_pairs[i];
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos || detail::trim(pair.substr(0, eq)).empty())
      throw ConfigError("--set expects key=value, got '" + pair + "'");
    overrides.push_back(
        {detail::trim(pair.substr(0, eq)), detail::trim(pair.substr(eq + 1)),
         static_cast<int>(i + 1)});
  }
  RunConfig c = resolve_config(preset_name, file_kvs, overrides);
  if (out_dir) c.output_dir = *out_dir;
  validate_config(c);
  return c;
}

}  // namespace bkap
