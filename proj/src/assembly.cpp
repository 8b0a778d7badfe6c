#include "crackfield/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace crackfield {

namespace {

QuadratureRule make_gauss2x2() {
  const double a = 1.0 / std::sqrt(3.0);
  QuadratureRule r;
  r.points = {{-a, -a}, {a, -a}, {a, a}, {-a, a}};
  r.weights = {1.0, 1.0, 1.0, 1.0};
  return r;
}

QuadratureRule make_gauss3x3() {
  const double b = std::sqrt(3.0 / 5.0);
  const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double x[3] = {-b, 0.0, b};
  QuadratureRule r;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      r.points.emplace_back(x[i], x[j]);
      r.weights.push_back(w[i] * w[j]);
    }
  return r;
}

QuadratureRule make_tri1() {
  QuadratureRule r;
  r.points = {{1.0 / 3.0, 1.0 / 3.0}};
  r.weights = {0.5};
  return r;
}

QuadratureRule make_tri3() {
  QuadratureRule r;
  r.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
  r.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  return r;
}

// Split [0, n) into contiguous chunks and run them on `threads` workers.
// Chunk boundaries do not depend on the thread count's scheduling, so any
// writes into per-element slots are deterministic.
template <typename Fn>
void parallel_ranges(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const int lo = static_cast<int>(static_cast<long>(n) * t / threads);
    const int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / threads);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

const QuadratureRule& QuadratureRule::gauss2x2() {
  static const QuadratureRule r = make_gauss2x2();
  return r;
}

const QuadratureRule& QuadratureRule::gauss3x3() {
  static const QuadratureRule r = make_gauss3x3();
  return r;
}

const QuadratureRule& QuadratureRule::tri1() {
  static const QuadratureRule r = make_tri1();
  return r;
}

const QuadratureRule& QuadratureRule::tri3() {
  static const QuadratureRule r = make_tri3();
  return r;
}

const QuadratureRule& QuadratureRule::displacement_rule(ElemKind kind) {
  return kind == ElemKind::Q4 ? gauss2x2() : tri1();
}

const QuadratureRule& QuadratureRule::phase_rule(ElemKind kind) {
  return kind == ElemKind::Q4 ? gauss2x2() : tri3();
}

void shape_eval(ElemKind kind, const Eigen::Vector2d& parent, Eigen::Vector4d& N,
                Eigen::Matrix<double, 2, 4>& dN_parent) {
  const double xi = parent.x(), eta = parent.y();
  N.setZero();
  dN_parent.setZero();
  if (kind == ElemKind::Q4) {
    N[0] = 0.25 * (1.0 - xi) * (1.0 - eta);
    N[1] = 0.25 * (1.0 + xi) * (1.0 - eta);
    N[2] = 0.25 * (1.0 + xi) * (1.0 + eta);
    N[3] = 0.25 * (1.0 - xi) * (1.0 + eta);
    dN_parent(0, 0) = -0.25 * (1.0 - eta);
    dN_parent(0, 1) = 0.25 * (1.0 - eta);
    dN_parent(0, 2) = 0.25 * (1.0 + eta);
    dN_parent(0, 3) = -0.25 * (1.0 + eta);
    dN_parent(1, 0) = -0.25 * (1.0 - xi);
    dN_parent(1, 1) = -0.25 * (1.0 + xi);
    dN_parent(1, 2) = 0.25 * (1.0 + xi);
    dN_parent(1, 3) = 0.25 * (1.0 - xi);
  } else {
    N[0] = 1.0 - xi - eta;
    N[1] = xi;
    N[2] = eta;
    dN_parent(0, 0) = -1.0;
    dN_parent(0, 1) = 1.0;
    dN_parent(1, 0) = -1.0;
    dN_parent(1, 2) = 1.0;
  }
}

BMatrices b_matrices(const Mesh& mesh, int elem, const Eigen::Vector2d& parent) {
  BMatrices out;
  out.nen = mesh.nodes_per_elem();

  Eigen::Matrix<double, 2, 4> dN;
  shape_eval(mesh.kind, parent, out.N, dN);

  const auto conn = mesh.elem(elem);
  Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();  // jac(a,b) = d x_b / d xi_a
  for (int i = 0; i < out.nen; ++i) {
    const auto& x = mesh.nodes[conn[i]];
    jac(0, 0) += dN(0, i) * x.x();
    jac(0, 1) += dN(0, i) * x.y();
    jac(1, 0) += dN(1, i) * x.x();
    jac(1, 1) += dN(1, i) * x.y();
  }
  out.detJ = jac.determinant();
  if (!(out.detJ > 0.0)) throw MeshError("inverted element in assembly");

  const Eigen::Matrix2d inv = jac.inverse();
  out.Bu.setZero();
  out.Bphi.setZero();
  for (int i = 0; i < out.nen; ++i) {
    const Eigen::Vector2d g = inv * dN.col(i).head<2>();
    out.Bphi(0, i) = g.x();
    out.Bphi(1, i) = g.y();
    out.Bu(0, 2 * i) = g.x();
    out.Bu(1, 2 * i + 1) = g.y();
    out.Bu(2, 2 * i) = g.y();
    out.Bu(2, 2 * i + 1) = g.x();
  }
  return out;
}

int states_per_elem(ElemKind kind) {
  return static_cast<int>(QuadratureRule::phase_rule(kind).points.size());
}

std::vector<QuadPointState> make_states(const Mesh& mesh) {
  return std::vector<QuadPointState>(
      static_cast<size_t>(mesh.num_elems()) * states_per_elem(mesh.kind));
}

MaterialParams element_material(const Mesh& mesh, int elem, const MaterialParams& base) {
  if (mesh.elem_modulus.empty()) return base;
  return base.with_modulus(mesh.elem_modulus[elem]);
}

SparseSystem assemble_displacement(const Mesh& mesh, const Eigen::VectorXd& phi_nodal,
                                   const MaterialParams& mat,
                                   std::span<const QuadPointState> states,
                                   int threads) {
  const int nen = mesh.nodes_per_elem();
  const int n_elem = mesh.num_elems();
  const int n_dof = 2 * mesh.num_nodes();
  const auto& rule = QuadratureRule::displacement_rule(mesh.kind);
  const int nsl = states_per_elem(mesh.kind);
  const int block = 2 * nen * 2 * nen;

  std::vector<Eigen::Triplet<double>> trips(static_cast<size_t>(n_elem) * block);

  parallel_ranges(n_elem, threads, [&](int lo, int hi) {
    Eigen::Matrix<double, 8, 8> ke;
    for (int e = lo; e < hi; ++e) {
      const auto conn = mesh.elem(e);
      const MaterialParams m = element_material(mesh, e, mat);
      ke.setZero();
      for (size_t q = 0; q < rule.points.size(); ++q) {
        const BMatrices b = b_matrices(mesh, e, rule.points[q]);
        double phase = 0.0;
        for (int i = 0; i < nen; ++i) phase += b.N[i] * phi_nodal[conn[i]];
        phase = std::clamp(phase, 0.0, 1.0);
        // The anisotropic tangent needs the current strain; take it from
        // the matching stored state (constant over T3 elements).
        const int sq = std::min(static_cast<int>(q), nsl - 1);
        const SymTensor2& strain = states[static_cast<size_t>(e) * nsl + sq].strain;
        const Eigen::Matrix3d d = tangent(strain, phase, m);
        const double w = rule.weights[q] * b.detJ;
        const auto bu = b.Bu.leftCols(2 * nen);
        ke.topLeftCorner(2 * nen, 2 * nen) += w * bu.transpose() * d * bu;
      }
      size_t slot = static_cast<size_t>(e) * block;
      for (int i = 0; i < 2 * nen; ++i) {
        const int gi = 2 * conn[i / 2] + i % 2;
        for (int j = 0; j < 2 * nen; ++j) {
          const int gj = 2 * conn[j / 2] + j % 2;
          trips[slot++] = {gi, gj, ke(i, j)};
        }
      }
    }
  });

  SparseSystem sys;
  sys.dofs_per_node = 2;
  sys.matrix.resize(n_dof, n_dof);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Zero(n_dof);
  return sys;
}

SparseSystem assemble_phase(const Mesh& mesh, std::span<const QuadPointState> states,
                            const MaterialParams& mat, int threads) {
  const int nen = mesh.nodes_per_elem();
  const int n_elem = mesh.num_elems();
  const int n_dof = mesh.num_nodes();
  const auto& rule = QuadratureRule::phase_rule(mesh.kind);
  const int block = nen * nen;

  std::vector<Eigen::Triplet<double>> trips(static_cast<size_t>(n_elem) * block);
  // Per-element rhs contributions in fixed slots, folded serially below, so
  // the result is bitwise independent of the thread count.
  std::vector<double> rhs_slots(static_cast<size_t>(n_elem) * nen, 0.0);

  parallel_ranges(n_elem, threads, [&](int lo, int hi) {
    Eigen::Matrix4d ke;
    for (int e = lo; e < hi; ++e) {
      const auto conn = mesh.elem(e);
      ke.setZero();
      for (size_t q = 0; q < rule.points.size(); ++q) {
        const BMatrices b = b_matrices(mesh, e, rule.points[q]);
        const double H = states[static_cast<size_t>(e) * rule.points.size() + q].H;
        const double w = rule.weights[q] * b.detJ;
        const double react = mat.Gc / mat.l0 + 2.0 * (1.0 - mat.k) * H;
        const double source = 2.0 * (1.0 - mat.k) * H;
        const auto bp = b.Bphi.leftCols(nen);
        ke.topLeftCorner(nen, nen) +=
            w * (mat.Gc * mat.l0 * bp.transpose() * bp +
                 react * b.N.head(nen) * b.N.head(nen).transpose());
        for (int i = 0; i < nen; ++i)
          rhs_slots[static_cast<size_t>(e) * nen + i] += w * source * b.N[i];
      }
      size_t slot = static_cast<size_t>(e) * block;
      for (int i = 0; i < nen; ++i)
        for (int j = 0; j < nen; ++j) trips[slot++] = {conn[i], conn[j], ke(i, j)};
    }
  });

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_dof);
  for (int e = 0; e < n_elem; ++e) {
    const auto conn = mesh.elem(e);
    for (int i = 0; i < nen; ++i)
      rhs[conn[i]] += rhs_slots[static_cast<size_t>(e) * nen + i];
  }

  SparseSystem sys;
  sys.dofs_per_node = 1;
  sys.matrix.resize(n_dof, n_dof);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  sys.matrix.makeCompressed();
  sys.rhs = std::move(rhs);
  return sys;
}

void update_states(const Mesh& mesh, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& phi_nodal, const MaterialParams& mat,
                   std::vector<QuadPointState>& states) {
  const int nen = mesh.nodes_per_elem();
  const auto& rule = QuadratureRule::phase_rule(mesh.kind);
  const int nsl = static_cast<int>(rule.points.size());

  for (int e = 0; e < mesh.num_elems(); ++e) {
    const auto conn = mesh.elem(e);
    const MaterialParams m = element_material(mesh, e, mat);
    Eigen::Matrix<double, 8, 1> d;
    for (int i = 0; i < nen; ++i) {
      d[2 * i] = u[2 * conn[i]];
      d[2 * i + 1] = u[2 * conn[i] + 1];
    }
    for (int q = 0; q < nsl; ++q) {
      const BMatrices b = b_matrices(mesh, e, rule.points[q]);
      const Eigen::Vector3d voigt =
          b.Bu.leftCols(2 * nen) * d.head(2 * nen);
      QuadPointState& s = states[static_cast<size_t>(e) * nsl + q];
      s.strain = SymTensor2::from_voigt(voigt);
      double phase = 0.0;
      for (int i = 0; i < nen; ++i) phase += b.N[i] * phi_nodal[conn[i]];
      s.phase = std::clamp(phase, 0.0, 1.0);
      s.H = update_history(s.H, s.strain, m);
    }
  }
}

Eigen::VectorXd project_to_nodes(const Mesh& mesh, std::span<const double> qp_values) {
  const int nen = mesh.nodes_per_elem();
  const auto& rule = QuadratureRule::phase_rule(mesh.kind);
  const int nsl = static_cast<int>(rule.points.size());
  Eigen::VectorXd num = Eigen::VectorXd::Zero(mesh.num_nodes());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elems(); ++e) {
    const auto conn = mesh.elem(e);
    for (int q = 0; q < nsl; ++q) {
      const BMatrices b = b_matrices(mesh, e, rule.points[q]);
      const double w = rule.weights[q] * b.detJ;
      const double v = qp_values[static_cast<size_t>(e) * nsl + q];
      for (int i = 0; i < nen; ++i) {
        num[conn[i]] += w * b.N[i] * v;
        den[conn[i]] += w * b.N[i];
      }
    }
  }
  return num.cwiseQuotient(den);
}

}  // namespace crackfield
