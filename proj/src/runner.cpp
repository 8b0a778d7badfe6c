#include "crackfield/scenario.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace crackfield {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_snapshot_pair(const fs::path& dir, const Simulation& sim, int step) {
  {
    std::ofstream os(dir / ("phi_" + std::to_string(step) + ".field"));
    write_field_snapshot(os, "phi", step, sim.phase_clamped());
  }
  {
    std::ofstream os(dir / ("H_" + std::to_string(step) + ".field"));
    write_field_snapshot(os, "H", step, sim.nodal_history());
  }
}

nlohmann::json metadata_json(const Scenario& s, const Mesh& mesh,
                             const RunOptions& opts) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["geometry"] = s.geometry == GeometryKind::Intact
                      ? "intact"
                      : s.geometry == GeometryKind::SingleFlaw ? "single_flaw"
                                                               : "two_flaws";
  j["specimen"] = {{"width_m", s.width}, {"height_m", s.height}};
  j["material"] = {{"E_Pa", s.material.E},
                   {"nu", s.material.nu},
                   {"lambda_Pa", s.material.lambda},
                   {"mu_Pa", s.material.mu},
                   {"Gc_N_per_m", s.material.Gc},
                   {"l0_m", s.material.l0},
                   {"k", s.material.k},
                   {"cohesion_Pa", s.material.cohesion},
                   {"friction_deg", s.material.friction_deg},
                   {"variant", variant_name(s.material.variant)}};
  if (s.geometry == GeometryKind::SingleFlaw) {
    j["flaw"] = {{"length_m", s.flaw.length},
                 {"width_m", s.flaw.width},
                 {"angle_deg", s.flaw.angle_deg},
                 {"eccentricity_m", s.flaw.eccentricity},
                 {"tip_geometry", "square-cut"}};
  }
  if (s.geometry == GeometryKind::TwoFlaws) {
    j["flaws"] = {{"arrangement", std::string(1, s.arrangement)},
                  {"length_m", s.flaw_a.length},
                  {"width_m", s.flaw_a.width},
                  {"angle_deg", s.flaw_a.angle_deg},
                  {"spacing_m", s.flaw_spacing},
                  {"offset_m", s.flaw_offset},
                  {"tip_geometry", "square-cut"}};
  }
  j["mesh"] = {{"kind", mesh.kind == ElemKind::Q4 ? "Q4" : "T3"},
               {"nodes", mesh.num_nodes()},
               {"elements", mesh.num_elems()},
               {"h_max_m", mesh.h_max}};
  if (s.geometry == GeometryKind::Intact) {
    j["mesh"]["nx"] = s.nx;
    j["mesh"]["ny"] = s.ny;
  } else {
    j["mesh"]["target_h_m"] = s.target_h;
  }
  if (s.stochastic) {
    j["stochastic"] = {{"E0_Pa", s.stochastic->E0},
                       {"m", s.stochastic->m},
                       {"seed", s.stochastic->seed},
                       {"generator", StochasticFieldSpec::generator_name}};
  }
  j["program"] = {{"delta_u_m", s.program.delta_u},
                  {"n_steps", s.program.n_steps},
                  {"load_set", s.program.constrained_set},
                  {"load_axis", s.program.load_axis},
                  {"load_sign", s.program.load_sign},
                  {"fixed_set", s.program.fixed_set},
                  {"fixed_mode",
                   s.program.fixed_mode == FixedMode::Fixed ? "fixed" : "normal"}};
  j["solver"] = {{"stagger_tol", s.solver.stagger_tol},
                 {"max_stagger_iters", s.solver.max_stagger_iters},
                 {"linear_tol", s.solver.linear_tol},
                 {"linear",
                  s.solver.linear == LinearSolverKind::Direct ? "direct" : "cg"},
                 {"threads", opts.threads}};
  j["output"] = {{"snapshot_stride", s.output.snapshot_stride}};
  return j;
}

}  // namespace

int run_scenario(const Scenario& s, const RunOptions& opts) {
  const fs::path dir = opts.out_dir.value_or(s.output.dir);
  fs::create_directories(dir);

  Mesh mesh = build_scenario_mesh(s);
  {
    std::ofstream os(dir / "mesh.txt");
    write_mesh(os, mesh);
  }
  if (!mesh.elem_modulus.empty()) {
    std::ofstream os(dir / "modulus.field");
    write_field_values(os, mesh.elem_modulus);
  }

  SolverConfig solver = s.solver;
  solver.threads = std::max(1, opts.threads);
  Simulation sim(std::move(mesh), s.material, s.program, solver);

  if (opts.resume) {
    std::ifstream is(*opts.resume, std::ios::binary);
    if (!is) {
      std::cerr << "cannot open checkpoint " << *opts.resume << "\n";
      return 3;
    }
    sim.load_checkpoint(is);
  }

  nlohmann::json meta = metadata_json(s, sim.mesh(), opts);
  meta["auto_pin_node"] = sim.auto_pin_node();
  if (opts.resume) meta["resumed_from_step"] = sim.step_index();

  std::ofstream curve(dir / "curve.csv", opts.resume ? std::ios::app : std::ios::out);
  if (!opts.resume) {
    curve << "# load per unit thickness (plane strain), N/m\n";
    curve << "step,u_mm,F_N_per_m,stagger_iters,max_phi\n";
  }

  bool crossed_half = false, crossed_peak = false;
  int status = 0;
  std::string failure;
  try {
    sim.run([&](Simulation& state, LoadStepResult& res) {
      bool snapshot = res.step % s.output.snapshot_stride == 0 ||
                      res.step == s.program.n_steps;
      if (!crossed_half && res.max_phi > 0.5) {
        crossed_half = true;
        snapshot = true;
      }
      if (!crossed_peak && res.max_phi > 0.95) {
        crossed_peak = true;
        snapshot = true;
      }
      if (snapshot) {
        write_snapshot_pair(dir, state, res.step);
        res.snapshot_id = "phi_" + std::to_string(res.step) + ".field";
      }
      curve << res.step << "," << num(1e3 * res.applied_u) << ","
            << num(res.reaction) << "," << res.stagger_iters << ","
            << num(res.max_phi) << "\n";
      curve.flush();
      std::ofstream ck(dir / "checkpoint.bin", std::ios::binary);
      state.save_checkpoint(ck);
    });
  } catch (const SolverError& err) {
    // Keep the last-good fields for diagnosis.
    failure = err.what();
    write_snapshot_pair(dir, sim, sim.step_index());
    status = 3;
  }

  meta["completed_steps"] = sim.step_index() - (status == 3 ? 1 : 0);
  if (status != 0) meta["failure"] = failure;
  std::ofstream meta_os(dir / "run.json");
  meta_os << meta.dump(2) << "\n";
  if (status != 0) std::cerr << "solver failure: " << failure << "\n";
  return status;
}

}  // namespace crackfield
