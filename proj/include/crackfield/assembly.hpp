#pragma once

#include "crackfield/material.hpp"
#include "crackfield/mesh.hpp"

#include <Eigen/Sparse>

#include <span>
#include <vector>

namespace crackfield {

struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;  // parent-domain coordinates
  std::vector<double> weights;          // sum to the parent-element measure

  static const QuadratureRule& gauss2x2();
  static const QuadratureRule& gauss3x3();
  static const QuadratureRule& tri1();
  static const QuadratureRule& tri3();

  /// Rule used for the displacement stiffness (Q4: 2x2 Gauss, T3: 1 point).
  static const QuadratureRule& displacement_rule(ElemKind kind);
  /// Rule used for the phase system and history storage (Q4: 2x2, T3: 3
  /// interior points so the reaction term is not under-integrated).
  static const QuadratureRule& phase_rule(ElemKind kind);
};

/// Shape functions and parent-domain gradients at a parent point. Only the
/// first `nen` columns are meaningful.
void shape_eval(ElemKind kind, const Eigen::Vector2d& parent, Eigen::Vector4d& N,
                Eigen::Matrix<double, 2, 4>& dN_parent);

struct BMatrices {
  Eigen::Matrix<double, 3, 8> Bu;    // strain-displacement, 3 x 2*nen
  Eigen::Matrix<double, 2, 4> Bphi;  // phase gradient, 2 x nen
  Eigen::Vector4d N;
  double detJ = 0.0;
  int nen = 0;
};

/// Physical-space kinematic matrices at a parent point of one element.
/// Throws MeshError for non-positive Jacobians (inverted element).
BMatrices b_matrices(const Mesh& mesh, int elem, const Eigen::Vector2d& parent);

/// State carried at one phase-rule quadrature point.
struct QuadPointState {
  SymTensor2 strain;
  double H = 0.0;      // historical maximum driving energy [J/m^3]
  double phase = 0.0;  // interpolated phase at the point
};

int states_per_elem(ElemKind kind);
std::vector<QuadPointState> make_states(const Mesh& mesh);

/// Sparse linear system in compressed-row form plus right-hand side.
/// Nodal dofs are blocked: dof = node * dofs_per_node + component.
struct SparseSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  Eigen::VectorXd rhs;
  int dofs_per_node = 1;

  int dof(int node, int comp = 0) const { return node * dofs_per_node + comp; }
};

/// Material of one element (per-element modulus override applied).
MaterialParams element_material(const Mesh& mesh, int elem, const MaterialParams& base);

/// K_u = sum_e int B_u^T D_e B_u dOmega with D_e the degraded tangent at the
/// interpolated phase. Body force is zero; the rhs comes back zeroed.
SparseSystem assemble_displacement(const Mesh& mesh, const Eigen::VectorXd& phi_nodal,
                                   const MaterialParams& mat,
                                   std::span<const QuadPointState> states,
                                   int threads = 1);

/// K_phi = sum_e int { B^T Gc l0 B + N^T [Gc/l0 + 2(1-k)H] N } dOmega and
/// F_phi = sum_e int 2(1-k) H N^T dOmega.
SparseSystem assemble_phase(const Mesh& mesh, std::span<const QuadPointState> states,
                            const MaterialParams& mat, int threads = 1);

/// Recomputes strains at every phase-rule point from the nodal displacement,
/// stores the interpolated phase, and ratchets H (monotone maximum).
void update_states(const Mesh& mesh, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& phi_nodal, const MaterialParams& mat,
                   std::vector<QuadPointState>& states);

/// Volume-weighted projection of per-quadrature-point values to nodes.
Eigen::VectorXd project_to_nodes(const Mesh& mesh, std::span<const double> qp_values);

}  // namespace crackfield
