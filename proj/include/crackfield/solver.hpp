#pragma once

#include "crackfield/assembly.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crackfield {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FixedMode { Fixed, Normal };

struct LoadProgram {
  double delta_u = 0.0;  // displacement increment per step [m], > 0
  int n_steps = 0;
  std::string constrained_set = "top";
  int load_axis = 1;        // 0 = x, 1 = y
  double load_sign = -1.0;  // -1 drives the loaded face inward (compression)
  std::string fixed_set = "bottom";
  FixedMode fixed_mode = FixedMode::Fixed;
};

enum class LinearSolverKind { Direct, ConjugateGradient };

struct SolverConfig {
  double stagger_tol = 1e-4;   // max nodal |dphi| and relative |du|
  int max_stagger_iters = 200;
  double linear_tol = 1e-8;    // relative residual for iterative solves
  LinearSolverKind linear = LinearSolverKind::Direct;
  int threads = 1;
};

struct LoadStepResult {
  int step = 0;
  double applied_u = 0.0;  // magnitude of the prescribed displacement [m]
  double reaction = 0.0;   // load on the driven face per unit thickness [N/m]
  int stagger_iters = 0;
  double max_phi = 0.0;
  std::string snapshot_id;  // set by the runner when a snapshot was written
};

struct DirichletBC {
  int dof = 0;
  double value = 0.0;
};

/// Symmetric elimination: zero row and column, unit diagonal, rhs moved.
/// Duplicate constraints with equal values are accepted; conflicting values
/// are an error.
void apply_dirichlet(SparseSystem& system, std::span<const DirichletBC> constraints);

/// Solves an SPD system by Cholesky or diagonally preconditioned CG.
Eigen::VectorXd solve_linear(const SparseSystem& system, const SolverConfig& config);

/// Displacement-controlled quasi-static staggered driver. Holds the mesh,
/// fields and quadrature history; one call to step() advances one load
/// increment.
class Simulation {
 public:
  Simulation(Mesh mesh, MaterialParams mat, LoadProgram program, SolverConfig config);

  /// One load step: alternate displacement and phase solves with monotone
  /// history updates until both fields settle. Throws SolverError when the
  /// stagger loop does not converge.
  LoadStepResult step();

  /// Runs the remaining steps of the program. The callback (if any) runs
  /// after each step and may annotate the result.
  std::vector<LoadStepResult> run(
      const std::function<void(Simulation&, LoadStepResult&)>& on_step = {});

  const Mesh& mesh() const { return mesh_; }
  const MaterialParams& material() const { return mat_; }
  const LoadProgram& program() const { return prog_; }
  const SolverConfig& config() const { return cfg_; }
  const Eigen::VectorXd& displacement() const { return u_; }
  const Eigen::VectorXd& phase() const { return phi_; }
  Eigen::VectorXd phase_clamped() const;
  const std::vector<QuadPointState>& states() const { return states_; }
  int step_index() const { return step_; }
  double applied_displacement() const { return prog_.delta_u * step_; }
  int auto_pin_node() const { return pin_node_; }

  /// Nodal projection of the quadrature history field.
  Eigen::VectorXd nodal_history() const;

  /// Binary checkpoint (little-endian, 16-byte magic/version header).
  void save_checkpoint(std::ostream& os) const;
  void load_checkpoint(std::istream& is);

 private:
  std::vector<DirichletBC> build_constraints(double applied) const;
  void apply_ambati_screen(Eigen::VectorXd& phi) const;

  Mesh mesh_;
  MaterialParams mat_;
  LoadProgram prog_;
  SolverConfig cfg_;
  Eigen::VectorXd u_;
  Eigen::VectorXd phi_;
  std::vector<QuadPointState> states_;
  int step_ = 0;
  int pin_node_ = -1;  // extra single-node pin when a rigid mode is loose
};

}  // namespace crackfield
