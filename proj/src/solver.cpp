#include "crackfield/solver.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace crackfield {

void apply_dirichlet(SparseSystem& system, std::span<const DirichletBC> constraints) {
  const int n = static_cast<int>(system.matrix.rows());
  std::vector<char> fixed(n, 0);
  std::vector<double> value(n, 0.0);
  for (const auto& bc : constraints) {
    if (bc.dof < 0 || bc.dof >= n) throw SolverError("constraint dof out of range");
    if (fixed[bc.dof] && value[bc.dof] != bc.value)
      throw SolverError("conflicting Dirichlet values on one dof");
    fixed[bc.dof] = 1;
    value[bc.dof] = bc.value;
  }

  auto& m = system.matrix;
  for (int row = 0; row < n; ++row) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, row); it;
         ++it) {
      const int col = static_cast<int>(it.col());
      if (fixed[row]) {
        it.valueRef() = (col == row) ? 1.0 : 0.0;
      } else if (fixed[col]) {
        system.rhs[row] -= it.value() * value[col];
        it.valueRef() = 0.0;
      }
    }
  }
  for (int d = 0; d < n; ++d) {
    if (!fixed[d]) continue;
    system.rhs[d] = value[d];
    if (m.coeff(d, d) != 1.0) throw SolverError("missing diagonal for constrained dof");
  }
}

Eigen::VectorXd solve_linear(const SparseSystem& system, const SolverConfig& config) {
  if (config.linear == LinearSolverKind::Direct) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
    const Eigen::SparseMatrix<double> a = system.matrix;
    llt.compute(a);
    if (llt.info() != Eigen::Success)
      throw SolverError("Cholesky factorization failed; system not SPD");
    return llt.solve(system.rhs);
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>,
                           Eigen::Lower | Eigen::Upper>
      cg;
  cg.setTolerance(config.linear_tol);
  cg.setMaxIterations(20000);
  cg.compute(system.matrix);
  const Eigen::VectorXd x = cg.solve(system.rhs);
  if (cg.info() != Eigen::Success)
    throw SolverError("conjugate gradient did not converge");
  return x;
}

Simulation::Simulation(Mesh mesh, MaterialParams mat, LoadProgram program,
                       SolverConfig config)
    : mesh_(std::move(mesh)),
      mat_(mat),
      prog_(std::move(program)),
      cfg_(config) {
  if (!(prog_.delta_u > 0.0)) throw SolverError("load increment must be positive");
  if (prog_.n_steps < 0) throw SolverError("negative step count");
  if (!mesh_.boundary_sets.count(prog_.constrained_set) ||
      mesh_.boundary_sets.at(prog_.constrained_set).empty())
    throw SolverError("unknown or empty constrained boundary set");
  if (!mesh_.boundary_sets.count(prog_.fixed_set) ||
      mesh_.boundary_sets.at(prog_.fixed_set).empty())
    throw SolverError("unknown or empty fixed boundary set");

  u_ = Eigen::VectorXd::Zero(2 * mesh_.num_nodes());
  phi_ = Eigen::VectorXd::Zero(mesh_.num_nodes());
  states_ = make_states(mesh_);

  // Normal-fixed support plus a transverse load leaves one translation
  // loose; pin it at the fixed-set node nearest that set's centroid.
  const int fixed_axis = (prog_.fixed_set == "left" || prog_.fixed_set == "right")
                             ? 0
                             : 1;
  const bool x_held = prog_.load_axis == 0 || prog_.fixed_mode == FixedMode::Fixed ||
                      fixed_axis == 0;
  const bool y_held = prog_.load_axis == 1 || prog_.fixed_mode == FixedMode::Fixed ||
                      fixed_axis == 1;
  if (!x_held || !y_held) {
    const auto& set = mesh_.boundary_sets.at(prog_.fixed_set);
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int i : set) centroid += mesh_.nodes[i];
    centroid /= static_cast<double>(set.size());
    double best = std::numeric_limits<double>::max();
    for (int i : set) {
      const double d = (mesh_.nodes[i] - centroid).squaredNorm();
      if (d < best - 1e-30) {
        best = d;
        pin_node_ = i;
      }
    }
  }
}

std::vector<DirichletBC> Simulation::build_constraints(double applied) const {
  std::vector<DirichletBC> bcs;
  const int fixed_axis = (prog_.fixed_set == "left" || prog_.fixed_set == "right")
                             ? 0
                             : 1;
  for (int node : mesh_.boundary_sets.at(prog_.fixed_set)) {
    if (prog_.fixed_mode == FixedMode::Fixed) {
      bcs.push_back({2 * node, 0.0});
      bcs.push_back({2 * node + 1, 0.0});
    } else {
      bcs.push_back({2 * node + fixed_axis, 0.0});
    }
  }
  if (pin_node_ >= 0) {
    const int loose_axis = fixed_axis == 0 ? 1 : 0;
    bcs.push_back({2 * pin_node_ + loose_axis, 0.0});
  }
  for (int node : mesh_.boundary_sets.at(prog_.constrained_set))
    bcs.push_back({2 * node + prog_.load_axis, applied});
  return bcs;
}

void Simulation::apply_ambati_screen(Eigen::VectorXd& phi) const {
  const int nsl = states_per_elem(mesh_.kind);
  std::vector<double> plus(states_.size()), minus(states_.size());
  for (int e = 0; e < mesh_.num_elems(); ++e) {
    const MaterialParams m = element_material(mesh_, e, mat_);
    for (int q = 0; q < nsl; ++q) {
      const size_t idx = static_cast<size_t>(e) * nsl + q;
      const auto [p, n] = psi_split(states_[idx].strain, m);
      plus[idx] = p;
      minus[idx] = n;
    }
  }
  const Eigen::VectorXd node_plus = project_to_nodes(mesh_, plus);
  const Eigen::VectorXd node_minus = project_to_nodes(mesh_, minus);
  for (int i = 0; i < phi.size(); ++i)
    if (node_plus[i] < node_minus[i]) phi[i] = 0.0;
}

LoadStepResult Simulation::step() {
  ++step_;
  const double applied = prog_.load_sign * prog_.delta_u * step_;

  const auto constraints = build_constraints(applied);
  Eigen::VectorXd u_iter = u_;
  Eigen::VectorXd phi_iter = phi_;

  int iters = 0;
  bool converged = false;
  while (iters < cfg_.max_stagger_iters) {
    ++iters;

    SparseSystem ku = assemble_displacement(mesh_, phi_iter, mat_, states_,
                                            cfg_.threads);
    apply_dirichlet(ku, constraints);
    const Eigen::VectorXd u_new = solve_linear(ku, cfg_);

    update_states(mesh_, u_new, phi_iter, mat_, states_);

    SparseSystem kphi = assemble_phase(mesh_, states_, mat_, cfg_.threads);
    Eigen::VectorXd phi_new = solve_linear(kphi, cfg_);
    if (mat_.variant == Variant::HybridAmbati) apply_ambati_screen(phi_new);

    const double du = (u_new - u_iter).norm() /
                      std::max(u_new.norm(), std::numeric_limits<double>::min());
    const double dphi = (phi_new - phi_iter).cwiseAbs().maxCoeff();
    u_iter = u_new;
    phi_iter = phi_new;
    if (du <= cfg_.stagger_tol && dphi <= cfg_.stagger_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SolverError("staggered iteration did not converge at step " +
                      std::to_string(step_));

  u_ = u_iter;
  phi_ = phi_iter;

  // Reaction from the unconstrained stiffness rows of the converged state.
  SparseSystem ku = assemble_displacement(mesh_, phi_, mat_, states_, cfg_.threads);
  const Eigen::VectorXd internal = ku.matrix * u_;
  double reaction = 0.0;
  for (int node : mesh_.boundary_sets.at(prog_.constrained_set))
    reaction += internal[2 * node + prog_.load_axis];
  reaction *= prog_.load_sign;

  LoadStepResult res;
  res.step = step_;
  res.applied_u = prog_.delta_u * step_;
  res.reaction = reaction;
  res.stagger_iters = iters;
  res.max_phi = std::clamp(phi_.maxCoeff(), 0.0, 1.0);
  return res;
}

std::vector<LoadStepResult> Simulation::run(
    const std::function<void(Simulation&, LoadStepResult&)>& on_step) {
  std::vector<LoadStepResult> results;
  results.reserve(prog_.n_steps);
  while (step_ < prog_.n_steps) {
    LoadStepResult res = step();
    if (on_step) on_step(*this, res);
    results.push_back(std::move(res));
  }
  return results;
}

Eigen::VectorXd Simulation::phase_clamped() const {
  return phi_.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::VectorXd Simulation::nodal_history() const {
  std::vector<double> h(states_.size());
  for (size_t i = 0; i < states_.size(); ++i) h[i] = states_[i].H;
  return project_to_nodes(mesh_, h);
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'F', 'C', 'H', 'K', 'P', 'T', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void Simulation::save_checkpoint(std::ostream& os) const {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = 1, reserved = 0;
  write_raw(os, version);
  write_raw(os, reserved);
  const std::int64_t step = step_;
  const std::int64_t n_nodes = mesh_.num_nodes();
  const std::int64_t n_states = static_cast<std::int64_t>(states_.size());
  write_raw(os, step);
  write_raw(os, n_nodes);
  write_raw(os, n_states);
  os.write(reinterpret_cast<const char*>(u_.data()),
           static_cast<std::streamsize>(sizeof(double) * u_.size()));
  os.write(reinterpret_cast<const char*>(phi_.data()),
           static_cast<std::streamsize>(sizeof(double) * phi_.size()));
  for (const auto& s : states_) {
    write_raw(os, s.H);
    write_raw(os, s.strain.xx);
    write_raw(os, s.strain.yy);
    write_raw(os, s.strain.xy);
    write_raw(os, s.phase);
  }
}

void Simulation::load_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw SolverError("bad checkpoint magic");
  std::uint32_t version = 0, reserved = 0;
  read_raw(is, version);
  read_raw(is, reserved);
  if (version != 1) throw SolverError("unsupported checkpoint version");
  std::int64_t step = 0, n_nodes = 0, n_states = 0;
  read_raw(is, step);
  read_raw(is, n_nodes);
  read_raw(is, n_states);
  if (n_nodes != mesh_.num_nodes() ||
      n_states != static_cast<std::int64_t>(states_.size()))
    throw SolverError("checkpoint does not match the current mesh");
  step_ = static_cast<int>(step);
  is.read(reinterpret_cast<char*>(u_.data()),
          static_cast<std::streamsize>(sizeof(double) * u_.size()));
  is.read(reinterpret_cast<char*>(phi_.data()),
          static_cast<std::streamsize>(sizeof(double) * phi_.size()));
  for (auto& s : states_) {
    read_raw(is, s.H);
    read_raw(is, s.strain.xx);
    read_raw(is, s.strain.yy);
    read_raw(is, s.strain.xy);
    read_raw(is, s.phase);
  }
  if (!is) throw SolverError("truncated checkpoint");
}

}  // namespace crackfield
