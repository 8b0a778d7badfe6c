#include "crackfield/scenario.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace crackfield;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

std::string minimal_config(const std::string& extra = "") {
  return "geometry = intact\n"
         "specimen.width_mm = 10\n"
         "specimen.height_mm = 20\n"
         "mesh.nx = 4\n"
         "mesh.ny = 8\n"
         "material.E_GPa = 60\n"
         "material.nu = 0.3\n"
         "material.Gc_N_per_m = 100\n"
         "material.l0_mm = 1\n"
         "material.cohesion_kPa = 100\n"
         "material.friction_deg = 15\n"
         "program.delta_u_mm = 1e-3\n"
         "program.n_steps = 5\n" +
         extra;
}

}  // namespace

TEST_CASE("shipped single-flaw config parses to the reference scenario") {
  const auto s = parse_config_file(fs::path(CONFIG_DIR) / "single_flaw_45.cfg");
  CHECK(s.geometry == GeometryKind::SingleFlaw);
  CHECK(s.width == doctest::Approx(0.05));
  CHECK(s.height == doctest::Approx(0.10));
  CHECK(s.material.E == doctest::Approx(60e9));
  CHECK(s.material.nu == doctest::Approx(0.3));
  CHECK(s.material.Gc == doctest::Approx(100.0));
  CHECK(s.material.l0 == doctest::Approx(1e-3));
  CHECK(s.material.k == doctest::Approx(1e-9));
  CHECK(s.material.cohesion == doctest::Approx(100e3));
  CHECK(s.material.friction_deg == doctest::Approx(15.0));
  CHECK(s.material.variant == Variant::HybridCompShear);
  CHECK(s.flaw.angle_deg == doctest::Approx(45.0));
  CHECK(s.flaw.length == doctest::Approx(5e-3));
  CHECK(s.flaw.width == doctest::Approx(1e-3));
  CHECK(s.program.delta_u == doctest::Approx(1e-7));  // 1e-4 mm
  CHECK(s.program.load_sign == -1.0);
  CHECK(s.target_h == doctest::Approx(0.5e-3));
}

TEST_CASE("config validation errors") {
  SUBCASE("missing required key names the key") {
    std::string cfg = minimal_config();
    const auto pos = cfg.find("material.Gc_N_per_m = 100\n");
    cfg.erase(pos, std::string("material.Gc_N_per_m = 100\n").size());
    try {
      parse_config(cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(std::string(err.what()).find("material.Gc_N_per_m") != std::string::npos);
    }
  }
  SUBCASE("incompressible Poisson ratio is rejected") {
    std::string cfg = minimal_config();
    const auto pos = cfg.find("material.nu = 0.3");
    cfg.replace(pos, std::string("material.nu = 0.3").size(), "material.nu = 0.5");
    CHECK_THROWS_AS(parse_config(cfg), ConfigError);
  }
  SUBCASE("unknown keys are rejected with their line") {
    try {
      parse_config(minimal_config("material.bogus = 1\n"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(err.line == 14);
      CHECK(std::string(err.what()).find("material.bogus") != std::string::npos);
    }
  }
  SUBCASE("malformed numbers are rejected") {
    std::string cfg = minimal_config();
    const auto pos = cfg.find("material.nu = 0.3");
    cfg.replace(pos, std::string("material.nu = 0.3").size(),
                "material.nu = zero point three");
    CHECK_THROWS_AS(parse_config(cfg), ConfigError);
  }
  SUBCASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(parse_config(minimal_config("geometry = intact\n")), ConfigError);
  }
}

TEST_CASE("echo round trip preserves every value") {
  const auto s = parse_config_file(fs::path(CONFIG_DIR) / "single_flaw_45.cfg");
  const std::string echoed = echo_config(s);
  const auto s2 = parse_config(echoed);
  CHECK(echo_config(s2) == echoed);
  CHECK(s2.material.lambda == doctest::Approx(s.material.lambda).epsilon(1e-12));
  CHECK(s2.program.delta_u == doctest::Approx(s.program.delta_u).epsilon(1e-12));
  CHECK(s2.flaw.center.y() == doctest::Approx(s.flaw.center.y()).epsilon(1e-12));
}

TEST_CASE("scenario meshes") {
  SUBCASE("intact grid with a stochastic modulus field") {
    auto s = parse_config(minimal_config("stochastic.enabled = true\n"
                                         "stochastic.E0_GPa = 90\n"
                                         "stochastic.seed = 99\n"));
    const Mesh a = build_scenario_mesh(s);
    const Mesh b = build_scenario_mesh(s);
    CHECK(a.num_elems() == 32);
    REQUIRE(a.elem_modulus.size() == 32);
    CHECK(a.elem_modulus == b.elem_modulus);
  }
  SUBCASE("two-flaw scenario builds disjoint slits") {
    const auto s =
        parse_config_file(fs::path(CONFIG_DIR) / "desk_two_flaws_A.cfg");
    const Mesh m = build_scenario_mesh(s);
    CHECK(m.kind == ElemKind::T3);
    const double slits = 2.0 * 7.5e-3 * 1e-3;
    CHECK(std::abs(m.total_area() - (0.05 * 0.10 - slits)) <= 1e-6 * 0.05 * 0.10);
  }
}

TEST_CASE("elastic run artifacts") {
  auto s = parse_config(minimal_config());
  s.material.cohesion = 1e12;  // no damage at these strains
  const fs::path dir = fs::temp_directory_path() / "crackfield_elastic_run";
  fs::remove_all(dir);
  RunOptions opts;
  opts.out_dir = dir.string();

  REQUIRE(run_scenario(s, opts) == 0);
  REQUIRE(fs::exists(dir / "curve.csv"));
  REQUIRE(fs::exists(dir / "run.json"));
  REQUIRE(fs::exists(dir / "mesh.txt"));

  // Strictly linear curve, no damage.
  std::ifstream curve(dir / "curve.csv");
  std::string line;
  std::getline(curve, line);  // comment
  std::getline(curve, line);  // header
  double f1 = 0.0;
  int rows = 0;
  while (std::getline(curve, line)) {
    ++rows;
    std::istringstream ls(line);
    int step;
    double u, f, phi;
    int iters;
    char comma;
    ls >> step >> comma >> u >> comma >> f >> comma >> iters >> comma >> phi;
    if (rows == 1) f1 = f;
    CHECK(f == doctest::Approx(rows * f1).epsilon(1e-8));
    CHECK(phi < 1e-6);
  }
  CHECK(rows == 5);

  // The monotone curve yields the no-peak signal.
  const RunMetrics m = extract_metrics(dir);
  CHECK(!m.peak_load.has_value());

  // Identical config reruns byte-identically.
  const std::string first = read_file(dir / "curve.csv");
  REQUIRE(run_scenario(s, opts) == 0);
  CHECK(read_file(dir / "curve.csv") == first);
  fs::remove_all(dir);
}

TEST_CASE("metrics on a synthetic curve") {
  const fs::path dir = fs::temp_directory_path() / "crackfield_synth_metrics";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "curve.csv");
    os << "# comment\nstep,u_mm,F_N_per_m,stagger_iters,max_phi\n";
    os << "0,0,0,1,0\n1,1,5,1,0\n2,2,3,1,0\n";
  }
  const RunMetrics m = extract_metrics(dir);
  REQUIRE(m.peak_load.has_value());
  CHECK(*m.peak_load == doctest::Approx(5.0));
  CHECK(m.displacement_at_peak == doctest::Approx(1e-3));
  CHECK(!m.band_width_l0.has_value());
  fs::remove_all(dir);
}
