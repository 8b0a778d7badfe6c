#include "crackfield/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace crackfield {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct RawEntry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

class ConfigMap {
 public:
  explicit ConfigMap(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError(lineno, "expected `key = value`");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError(lineno, "expected `key = value`");
      if (entries_.count(key))
        throw ConfigError(lineno, "duplicate key `" + key + "`");
      entries_[key] = {value, lineno, false};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const RawEntry& require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError(0, "missing required key `" + key + "`");
    it->second.used = true;
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    return it->second.value;
  }

  std::string get_string_required(const std::string& key) const {
    return require(key).value;
  }

  double get_number(const std::string& key, std::optional<double> fallback = {}) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (fallback) return *fallback;
      throw ConfigError(0, "missing required key `" + key + "`");
    }
    it->second.used = true;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second.value, &pos);
      if (pos != it->second.value.size())
        throw ConfigError(it->second.line, "malformed number for `" + key + "`");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(it->second.line, "malformed number for `" + key + "`");
    }
  }

  long long get_integer(const std::string& key,
                        std::optional<long long> fallback = {}) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (fallback) return *fallback;
      throw ConfigError(0, "missing required key `" + key + "`");
    }
    const double v = get_number(key);
    const long long n = static_cast<long long>(std::llround(v));
    if (static_cast<double>(n) != v)
      throw ConfigError(it->second.line, "`" + key + "` must be an integer");
    return n;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    const std::string& v = it->second.value;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(it->second.line, "`" + key + "` must be a boolean");
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_)
      if (!entry.used)
        throw ConfigError(entry.line, "unknown key `" + key + "`");
  }

 private:
  std::map<std::string, RawEntry> entries_;
};

Variant parse_variant(const ConfigMap& cfg) {
  const std::string v = cfg.get_string("material.variant", "hybrid_comp_shear");
  if (v == "isotropic") return Variant::Isotropic;
  if (v == "anisotropic_miehe") return Variant::AnisotropicMiehe;
  if (v == "hybrid_ambati") return Variant::HybridAmbati;
  if (v == "hybrid_comp_shear") return Variant::HybridCompShear;
  throw ConfigError(cfg.line_of("material.variant"),
                    "unknown material.variant `" + v + "`");
}

}  // namespace

Scenario parse_config(const std::string& text) {
  const ConfigMap cfg(text);
  Scenario s;

  const std::string geom = cfg.get_string_required("geometry");
  if (geom == "intact") s.geometry = GeometryKind::Intact;
  else if (geom == "single_flaw") s.geometry = GeometryKind::SingleFlaw;
  else if (geom == "two_flaws") s.geometry = GeometryKind::TwoFlaws;
  else throw ConfigError(cfg.line_of("geometry"), "unknown geometry `" + geom + "`");

  s.width = 1e-3 * cfg.get_number("specimen.width_mm");
  s.height = 1e-3 * cfg.get_number("specimen.height_mm");
  if (!(s.width > 0.0 && s.height > 0.0))
    throw ConfigError(cfg.line_of("specimen.width_mm"),
                      "specimen dimensions must be positive");

  // Material (config units: GPa, kPa, N/m, mm).
  const double E = 1e9 * cfg.get_number("material.E_GPa");
  const double nu = cfg.get_number("material.nu");
  const double Gc = cfg.get_number("material.Gc_N_per_m");
  const double l0 = 1e-3 * cfg.get_number("material.l0_mm");
  const double k = cfg.get_number("material.k", 1e-9);
  const Variant variant = parse_variant(cfg);
  const bool needs_mc = variant == Variant::HybridCompShear;
  const double cohesion =
      1e3 * (needs_mc ? cfg.get_number("material.cohesion_kPa")
                      : cfg.get_number("material.cohesion_kPa", 0.0));
  const double friction = needs_mc ? cfg.get_number("material.friction_deg")
                                   : cfg.get_number("material.friction_deg", 0.0);
  try {
    s.material = make_material(E, nu, Gc, l0, k, cohesion, friction, variant);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.line_of("material.E_GPa"), err.what());
  }

  // Mesh resolution.
  if (s.geometry == GeometryKind::Intact) {
    if (cfg.has("mesh.nx") || cfg.has("mesh.ny")) {
      s.nx = static_cast<int>(cfg.get_integer("mesh.nx"));
      s.ny = static_cast<int>(cfg.get_integer("mesh.ny"));
    } else {
      const double h = 1e-3 * cfg.get_number("mesh.target_h_mm");
      if (!(h > 0.0))
        throw ConfigError(cfg.line_of("mesh.target_h_mm"),
                          "mesh.target_h_mm must be positive");
      s.nx = std::max(1, static_cast<int>(std::lround(s.width / h)));
      s.ny = std::max(1, static_cast<int>(std::lround(s.height / h)));
    }
    if (s.nx < 1 || s.ny < 1)
      throw ConfigError(cfg.line_of("mesh.nx"), "grid counts must be at least 1");
  } else {
    s.target_h = 1e-3 * cfg.get_number("mesh.target_h_mm");
    if (!(s.target_h > 0.0))
      throw ConfigError(cfg.line_of("mesh.target_h_mm"),
                        "mesh.target_h_mm must be positive");
  }

  if (s.geometry == GeometryKind::SingleFlaw) {
    s.flaw.length = 1e-3 * cfg.get_number("flaw.length_mm", 5.0);
    s.flaw.width = 1e-3 * cfg.get_number("flaw.width_mm", 1.0);
    s.flaw.angle_deg = cfg.get_number("flaw.angle_deg");
    s.flaw.eccentricity = 1e-3 * cfg.get_number("flaw.eccentricity_mm", 0.0);
    s.flaw.center = {0.5 * s.width, 0.5 * s.height + s.flaw.eccentricity};
    try {
      s.flaw.validate();
    } catch (const MeshError& err) {
      throw ConfigError(cfg.line_of("flaw.angle_deg"), err.what());
    }
  } else if (s.geometry == GeometryKind::TwoFlaws) {
    const std::string arr = cfg.get_string_required("flaws.arrangement");
    if (arr != "A" && arr != "B")
      throw ConfigError(cfg.line_of("flaws.arrangement"),
                        "flaws.arrangement must be A or B");
    s.arrangement = arr[0];
    FlawSpec f;
    f.length = 1e-3 * cfg.get_number("flaws.length_mm", 7.5);
    f.width = 1e-3 * cfg.get_number("flaws.width_mm", 1.0);
    f.angle_deg = cfg.get_number("flaws.angle_deg", 30.0);
    s.flaw_spacing = 1e-3 * cfg.get_number("flaws.spacing_mm", 15.0);
    s.flaw_offset =
        1e-3 * cfg.get_number("flaws.offset_mm", s.arrangement == 'A' ? 0.0 : 7.5);
    if (s.arrangement == 'A' && s.flaw_offset != 0.0)
      throw ConfigError(cfg.line_of("flaws.offset_mm"),
                        "coplanar arrangement A requires zero offset");
    const double a = f.angle_deg * kPi / 180.0;
    const Eigen::Vector2d axis(std::cos(a), std::sin(a));
    const Eigen::Vector2d perp(-std::sin(a), std::cos(a));
    const Eigen::Vector2d center(0.5 * s.width, 0.5 * s.height);
    s.flaw_a = s.flaw_b = f;
    s.flaw_a.center = center - 0.5 * s.flaw_spacing * axis - 0.5 * s.flaw_offset * perp;
    s.flaw_b.center = center + 0.5 * s.flaw_spacing * axis + 0.5 * s.flaw_offset * perp;
    try {
      s.flaw_a.validate();
    } catch (const MeshError& err) {
      throw ConfigError(cfg.line_of("flaws.angle_deg"), err.what());
    }
  }

  if (cfg.get_bool("stochastic.enabled", false)) {
    StochasticFieldSpec spec;
    spec.E0 = 1e9 * cfg.get_number("stochastic.E0_GPa");
    spec.m = cfg.get_number("stochastic.m", 1.0);
    spec.seed = static_cast<std::uint64_t>(cfg.get_integer("stochastic.seed"));
    if (!(spec.E0 > 0.0) || !(spec.m > 0.0))
      throw ConfigError(cfg.line_of("stochastic.E0_GPa"),
                        "stochastic field needs E0 > 0 and m > 0");
    s.stochastic = spec;
  }

  s.program.delta_u = 1e-3 * cfg.get_number("program.delta_u_mm");
  s.program.n_steps = static_cast<int>(cfg.get_integer("program.n_steps"));
  if (!(s.program.delta_u > 0.0))
    throw ConfigError(cfg.line_of("program.delta_u_mm"),
                      "program.delta_u_mm must be positive");
  if (s.program.n_steps < 1)
    throw ConfigError(cfg.line_of("program.n_steps"),
                      "program.n_steps must be at least 1");
  s.program.constrained_set = cfg.get_string("program.load_set", "top");
  const std::string dir = cfg.get_string("program.load_dir", "-y");
  if (dir == "+x" || dir == "-x") s.program.load_axis = 0;
  else if (dir == "+y" || dir == "-y") s.program.load_axis = 1;
  else
    throw ConfigError(cfg.line_of("program.load_dir"),
                      "program.load_dir must be one of +x,-x,+y,-y");
  s.program.load_sign = dir[0] == '-' ? -1.0 : 1.0;
  s.program.fixed_set = cfg.get_string("program.fixed_set", "bottom");
  const std::string mode = cfg.get_string("program.fixed_mode", "fixed");
  if (mode == "fixed") s.program.fixed_mode = FixedMode::Fixed;
  else if (mode == "normal") s.program.fixed_mode = FixedMode::Normal;
  else
    throw ConfigError(cfg.line_of("program.fixed_mode"),
                      "program.fixed_mode must be `fixed` or `normal`");

  s.solver.stagger_tol = cfg.get_number("solver.stagger_tol", 1e-4);
  s.solver.max_stagger_iters =
      static_cast<int>(cfg.get_integer("solver.max_stagger_iters", 200));
  s.solver.linear_tol = cfg.get_number("solver.linear_tol", 1e-8);
  const std::string lin = cfg.get_string("solver.linear", "direct");
  if (lin == "direct") s.solver.linear = LinearSolverKind::Direct;
  else if (lin == "cg") s.solver.linear = LinearSolverKind::ConjugateGradient;
  else
    throw ConfigError(cfg.line_of("solver.linear"),
                      "solver.linear must be `direct` or `cg`");
  if (!(s.solver.stagger_tol > 0.0) || !(s.solver.linear_tol > 0.0))
    throw ConfigError(cfg.line_of("solver.stagger_tol"),
                      "solver tolerances must be positive");
  if (s.solver.max_stagger_iters < 1)
    throw ConfigError(cfg.line_of("solver.max_stagger_iters"),
                      "solver.max_stagger_iters must be at least 1");

  s.output.dir = cfg.get_string("output.dir", "out");
  s.output.snapshot_stride =
      static_cast<int>(cfg.get_integer("output.snapshot_stride", 50));
  if (s.output.snapshot_stride < 1)
    throw ConfigError(cfg.line_of("output.snapshot_stride"),
                      "output.snapshot_stride must be at least 1");

  cfg.reject_unused();
  return s;
}

Scenario parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(0, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string echo_config(const Scenario& s) {
  std::ostringstream os;
  os << "geometry = "
     << (s.geometry == GeometryKind::Intact
             ? "intact"
             : s.geometry == GeometryKind::SingleFlaw ? "single_flaw" : "two_flaws")
     << "\n";
  os << "specimen.width_mm = " << fmt(1e3 * s.width) << "\n";
  os << "specimen.height_mm = " << fmt(1e3 * s.height) << "\n";
  if (s.geometry == GeometryKind::Intact) {
    os << "mesh.nx = " << s.nx << "\n";
    os << "mesh.ny = " << s.ny << "\n";
  } else {
    os << "mesh.target_h_mm = " << fmt(1e3 * s.target_h) << "\n";
  }
  if (s.geometry == GeometryKind::SingleFlaw) {
    os << "flaw.length_mm = " << fmt(1e3 * s.flaw.length) << "\n";
    os << "flaw.width_mm = " << fmt(1e3 * s.flaw.width) << "\n";
    os << "flaw.angle_deg = " << fmt(s.flaw.angle_deg) << "\n";
    os << "flaw.eccentricity_mm = " << fmt(1e3 * s.flaw.eccentricity) << "\n";
  }
  if (s.geometry == GeometryKind::TwoFlaws) {
    os << "flaws.arrangement = " << s.arrangement << "\n";
    os << "flaws.length_mm = " << fmt(1e3 * s.flaw_a.length) << "\n";
    os << "flaws.width_mm = " << fmt(1e3 * s.flaw_a.width) << "\n";
    os << "flaws.angle_deg = " << fmt(s.flaw_a.angle_deg) << "\n";
    os << "flaws.spacing_mm = " << fmt(1e3 * s.flaw_spacing) << "\n";
    os << "flaws.offset_mm = " << fmt(1e3 * s.flaw_offset) << "\n";
  }
  os << "material.E_GPa = " << fmt(1e-9 * s.material.E) << "\n";
  os << "material.nu = " << fmt(s.material.nu) << "\n";
  os << "material.Gc_N_per_m = " << fmt(s.material.Gc) << "\n";
  os << "material.l0_mm = " << fmt(1e3 * s.material.l0) << "\n";
  os << "material.k = " << fmt(s.material.k) << "\n";
  os << "material.cohesion_kPa = " << fmt(1e-3 * s.material.cohesion) << "\n";
  os << "material.friction_deg = " << fmt(s.material.friction_deg) << "\n";
  os << "material.variant = " << variant_name(s.material.variant) << "\n";
  if (s.stochastic) {
    os << "stochastic.enabled = true\n";
    os << "stochastic.E0_GPa = " << fmt(1e-9 * s.stochastic->E0) << "\n";
    os << "stochastic.m = " << fmt(s.stochastic->m) << "\n";
    os << "stochastic.seed = " << s.stochastic->seed << "\n";
  }
  os << "program.delta_u_mm = " << fmt(1e3 * s.program.delta_u) << "\n";
  os << "program.n_steps = " << s.program.n_steps << "\n";
  os << "program.load_set = " << s.program.constrained_set << "\n";
  os << "program.load_dir = " << (s.program.load_sign < 0 ? "-" : "+")
     << (s.program.load_axis == 0 ? "x" : "y") << "\n";
  os << "program.fixed_set = " << s.program.fixed_set << "\n";
  os << "program.fixed_mode = "
     << (s.program.fixed_mode == FixedMode::Fixed ? "fixed" : "normal") << "\n";
  os << "solver.stagger_tol = " << fmt(s.solver.stagger_tol) << "\n";
  os << "solver.max_stagger_iters = " << s.solver.max_stagger_iters << "\n";
  os << "solver.linear_tol = " << fmt(s.solver.linear_tol) << "\n";
  os << "solver.linear = "
     << (s.solver.linear == LinearSolverKind::Direct ? "direct" : "cg") << "\n";
  os << "output.dir = " << s.output.dir << "\n";
  os << "output.snapshot_stride = " << s.output.snapshot_stride << "\n";
  return os.str();
}

Mesh build_scenario_mesh(const Scenario& s) {
  Mesh mesh;
  switch (s.geometry) {
    case GeometryKind::Intact:
      mesh = generate_structured_quad(s.width, s.height, s.nx, s.ny);
      break;
    case GeometryKind::SingleFlaw:
      mesh = generate_flawed_mesh(s.width, s.height, {&s.flaw, 1}, s.target_h);
      break;
    case GeometryKind::TwoFlaws: {
      const FlawSpec flaws[2] = {s.flaw_a, s.flaw_b};
      mesh = generate_flawed_mesh(s.width, s.height, flaws, s.target_h);
      break;
    }
  }
  if (s.stochastic) {
    StochasticFieldSpec spec = *s.stochastic;
    spec.n = mesh.num_elems();
    mesh.elem_modulus = sample_field(spec);
  }
  return mesh;
}

void write_field_snapshot(std::ostream& os, const std::string& name, int step,
                          const Eigen::VectorXd& values) {
  os << "field " << name << " nodes " << values.size() << " step " << step << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", values[i]);
    os << buf;
  }
}

}  // namespace crackfield
