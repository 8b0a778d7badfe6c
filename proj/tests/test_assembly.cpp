#include "crackfield/assembly.hpp"

#include "crackfield/solver.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace crackfield;

namespace {

MaterialParams test_material(Variant v = Variant::HybridCompShear) {
  return make_material(60e9, 0.3, 100.0, 1e-3, 1e-9, 100e3, 15.0, v);
}

// Independent element stiffness for an axis-aligned rectangular Q4: its own
// bilinear shape derivation and a dense 4x4 Gauss rule, sharing nothing with
// the assembly path.
Eigen::MatrixXd reference_q4_stiffness(double ax, double ay,
                                       const Eigen::Matrix3d& d) {
  const double gp[4] = {-0.8611363115940526, -0.3399810435848563,
                        0.3399810435848563, 0.8611363115940526};
  const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                        0.6521451548625461, 0.3478548451374538};
  Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(8, 8);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double xi = gp[a], eta = gp[b];
      // dN/dxi, dN/deta for nodes (-1,-1),(1,-1),(1,1),(-1,1).
      const double dxi[4] = {-0.25 * (1 - eta), 0.25 * (1 - eta), 0.25 * (1 + eta),
                             -0.25 * (1 + eta)};
      const double deta[4] = {-0.25 * (1 - xi), -0.25 * (1 + xi), 0.25 * (1 + xi),
                              0.25 * (1 - xi)};
      Eigen::MatrixXd bu = Eigen::MatrixXd::Zero(3, 8);
      for (int i = 0; i < 4; ++i) {
        const double nx = dxi[i] * 2.0 / ax;  // parent -> physical
        const double ny = deta[i] * 2.0 / ay;
        bu(0, 2 * i) = nx;
        bu(1, 2 * i + 1) = ny;
        bu(2, 2 * i) = ny;
        bu(2, 2 * i + 1) = nx;
      }
      const double jac = 0.25 * ax * ay;
      ke += gw[a] * gw[b] * jac * bu.transpose() * d * bu;
    }
  return ke;
}

}  // namespace

TEST_CASE("quadrature rules integrate the parent measure") {
  const auto sum = [](const QuadratureRule& r) {
    double s = 0.0;
    for (double w : r.weights) s += w;
    return s;
  };
  CHECK(sum(QuadratureRule::gauss2x2()) == doctest::Approx(4.0));
  CHECK(sum(QuadratureRule::gauss3x3()) == doctest::Approx(4.0));
  CHECK(sum(QuadratureRule::tri1()) == doctest::Approx(0.5));
  CHECK(sum(QuadratureRule::tri3()) == doctest::Approx(0.5));
}

TEST_CASE("shape functions") {
  Eigen::Vector4d n;
  Eigen::Matrix<double, 2, 4> dn;
  SUBCASE("Q4 center") {
    shape_eval(ElemKind::Q4, {0.0, 0.0}, n, dn);
    for (int i = 0; i < 4; ++i) CHECK(n[i] == doctest::Approx(0.25));
  }
  SUBCASE("Q4 corner interpolation") {
    shape_eval(ElemKind::Q4, {-1.0, -1.0}, n, dn);
    CHECK(n[0] == doctest::Approx(1.0));
    CHECK(n[1] == 0.0);
    CHECK(n[2] == 0.0);
    CHECK(n[3] == 0.0);
  }
  SUBCASE("T3 barycenter") {
    shape_eval(ElemKind::T3, {1.0 / 3.0, 1.0 / 3.0}, n, dn);
    for (int i = 0; i < 3; ++i) CHECK(n[i] == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("partition of unity and gradient closure") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Vector2d p(u(rng), u(rng));
      shape_eval(ElemKind::Q4, p, n, dn);
      CHECK(n.sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(dn.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
      const Eigen::Vector2d q(0.25 * (u(rng) + 1.0), 0.25 * (u(rng) + 1.0));
      shape_eval(ElemKind::T3, q, n, dn);
      CHECK(n.head(3).sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(dn.leftCols(3).rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
    }
  }
}

TEST_CASE("kinematic matrices") {
  SUBCASE("linear displacement reproduces constant strain on Q4") {
    const Mesh m = generate_structured_quad(1.0, 1.0, 1, 1);
    Eigen::VectorXd d(8);
    for (int i = 0; i < 4; ++i) {
      d[2 * i] = m.nodes[m.elem(0)[i]].x();  // u = (x, 0)
      d[2 * i + 1] = 0.0;
    }
    for (const auto& p : QuadratureRule::gauss2x2().points) {
      const BMatrices b = b_matrices(m, 0, p);
      const Eigen::Vector3d strain = b.Bu.leftCols(8) * d;
      CHECK(strain[0] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(strain[1]) <= 1e-12);
      CHECK(std::abs(strain[2]) <= 1e-12);
    }
  }
  SUBCASE("rigid translation produces zero strain") {
    const Mesh m = generate_structured_quad(2.0, 3.0, 2, 2);
    Eigen::VectorXd d(8);
    for (int i = 0; i < 4; ++i) {
      d[2 * i] = 0.7;
      d[2 * i + 1] = -1.3;
    }
    const BMatrices b = b_matrices(m, 1, {0.3, -0.8});
    CHECK((b.Bu.leftCols(8) * d).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("T3 phase gradient") {
    Mesh m;
    m.kind = ElemKind::T3;
    m.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    m.conn = {0, 1, 2};
    m.width = m.height = 1.0;
    const BMatrices b = b_matrices(m, 0, {1.0 / 3.0, 1.0 / 3.0});
    const Eigen::Vector3d phi(0.0, 1.0, 0.0);
    const Eigen::Vector2d grad = b.Bphi.leftCols(3) * phi;
    CHECK(grad.x() == doctest::Approx(1.0));
    CHECK(grad.y() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(b.detJ == doctest::Approx(1.0));
  }
  SUBCASE("inverted element is reported") {
    Mesh m;
    m.kind = ElemKind::T3;
    m.nodes = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};  // clockwise
    m.conn = {0, 1, 2};
    m.width = m.height = 1.0;
    CHECK_THROWS_AS(b_matrices(m, 0, {0.25, 0.25}), MeshError);
  }
}

TEST_CASE("displacement stiffness") {
  const auto mat = test_material();

  SUBCASE("single element matches the independent integration oracle") {
    const Mesh m = generate_structured_quad(1.0, 1.0, 1, 1);
    const Eigen::VectorXd phi = Eigen::VectorXd::Zero(m.num_nodes());
    const auto states = make_states(m);
    const SparseSystem sys = assemble_displacement(m, phi, mat, states);
    const Eigen::MatrixXd k = Eigen::MatrixXd(sys.matrix);
    const Eigen::MatrixXd ref_local = reference_q4_stiffness(
        1.0, 1.0, degradation(0.0, mat.k) * hooke_plane_strain(mat.lambda, mat.mu));
    // Map the reference from local to global dof order.
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(8, 8);
    const auto conn = m.elem(0);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        ref(2 * conn[i / 2] + i % 2, 2 * conn[j / 2] + j % 2) = ref_local(i, j);
    CHECK((k - ref).cwiseAbs().maxCoeff() <= 1e-9 * ref.cwiseAbs().maxCoeff());
  }

  SUBCASE("fully damaged stiffness is the residual fraction") {
    const Mesh m = generate_structured_quad(1.0, 1.0, 1, 1);
    const auto states = make_states(m);
    const SparseSystem k0 =
        assemble_displacement(m, Eigen::VectorXd::Zero(m.num_nodes()), mat, states);
    const SparseSystem k1 =
        assemble_displacement(m, Eigen::VectorXd::Ones(m.num_nodes()), mat, states);
    const Eigen::MatrixXd a = Eigen::MatrixXd(k0.matrix);
    const Eigen::MatrixXd b = Eigen::MatrixXd(k1.matrix);
    CHECK((b - mat.k * a / degradation(0.0, mat.k)).cwiseAbs().maxCoeff() <=
          1e-12 * a.cwiseAbs().maxCoeff());
  }

  SUBCASE("patch test: interior residual vanishes under a linear field") {
    const Mesh m = generate_structured_quad(2.0, 2.0, 2, 2);
    const auto states = make_states(m);
    const Eigen::VectorXd phi = Eigen::VectorXd::Zero(m.num_nodes());
    SparseSystem sys = assemble_displacement(m, phi, mat, states);

    // u = A x + b with a symmetric gradient.
    const auto field = [](const Eigen::Vector2d& p) {
      return Eigen::Vector2d(1e-3 * p.x() + 2e-4 * p.y(),
                             2e-4 * p.x() - 5e-4 * p.y());
    };
    Eigen::VectorXd exact(2 * m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i)
      exact.segment<2>(2 * i) = field(m.nodes[i]);

    std::vector<DirichletBC> bcs;
    for (int i = 0; i < m.num_nodes(); ++i) {
      const auto& p = m.nodes[i];
      const bool boundary =
          p.x() == 0.0 || p.x() == 2.0 || p.y() == 0.0 || p.y() == 2.0;
      if (!boundary) continue;
      bcs.push_back({2 * i, exact[2 * i]});
      bcs.push_back({2 * i + 1, exact[2 * i + 1]});
    }
    const Eigen::VectorXd residual_before = sys.matrix * exact;
    apply_dirichlet(sys, bcs);
    const Eigen::VectorXd solved = solve_linear(sys, SolverConfig{});
    CHECK((solved - exact).cwiseAbs().maxCoeff() <= 1e-12);
    // Interior equilibrium of the exact field.
    for (int i = 0; i < m.num_nodes(); ++i) {
      const auto& p = m.nodes[i];
      if (p.x() == 0.0 || p.x() == 2.0 || p.y() == 0.0 || p.y() == 2.0) continue;
      CHECK(std::abs(residual_before[2 * i]) <= 1e-6);
      CHECK(std::abs(residual_before[2 * i + 1]) <= 1e-6);
    }
  }

  SUBCASE("doubling the quadrature order leaves rectangles unchanged") {
    const Mesh m = generate_structured_quad(0.03, 0.02, 3, 2);
    const auto mat_here = test_material();
    for (int e = 0; e < m.num_elems(); ++e) {
      Eigen::MatrixXd k2 = Eigen::MatrixXd::Zero(8, 8);
      Eigen::MatrixXd k3 = Eigen::MatrixXd::Zero(8, 8);
      const Eigen::Matrix3d d = hooke_plane_strain(mat_here.lambda, mat_here.mu);
      for (size_t q = 0; q < QuadratureRule::gauss2x2().points.size(); ++q) {
        const BMatrices b = b_matrices(m, e, QuadratureRule::gauss2x2().points[q]);
        k2 += QuadratureRule::gauss2x2().weights[q] * b.detJ *
              b.Bu.leftCols(8).transpose() * d * b.Bu.leftCols(8);
      }
      for (size_t q = 0; q < QuadratureRule::gauss3x3().points.size(); ++q) {
        const BMatrices b = b_matrices(m, e, QuadratureRule::gauss3x3().points[q]);
        k3 += QuadratureRule::gauss3x3().weights[q] * b.detJ *
              b.Bu.leftCols(8).transpose() * d * b.Bu.leftCols(8);
      }
      CHECK((k2 - k3).cwiseAbs().maxCoeff() <= 1e-12 * k2.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("phase system") {
  const auto mat = test_material();

  SUBCASE("zero history gives the zero phase") {
    const Mesh m = generate_structured_quad(0.01, 0.01, 4, 4);
    const auto states = make_states(m);
    const SparseSystem sys = assemble_phase(m, states, mat);
    const Eigen::VectorXd phi = solve_linear(sys, SolverConfig{});
    CHECK(phi.cwiseAbs().maxCoeff() <= 1e-14);
  }

  SUBCASE("uniform history gives the homogeneous solution") {
    // 2 l0 (1-k) H / Gc = 1  =>  phi = 0.5 everywhere.
    const double H = mat.Gc / (2.0 * mat.l0 * (1.0 - mat.k));
    for (bool tri : {false, true}) {
      Mesh m;
      if (tri) {
        FlawSpec f;
        f.center = {0.025, 0.05};
        f.length = 5e-3;
        f.width = 1e-3;
        f.angle_deg = 45.0;
        m = generate_flawed_mesh(0.05, 0.10, {&f, 1}, 1e-3);
      } else {
        m = generate_structured_quad(0.01, 0.02, 5, 8);
      }
      auto states = make_states(m);
      for (auto& s : states) s.H = H;
      const SparseSystem sys = assemble_phase(m, states, mat);
      const Eigen::VectorXd phi = solve_linear(sys, SolverConfig{});
      CHECK((phi.array() - 0.5).abs().maxCoeff() <= 1e-8);
    }
  }

  SUBCASE("row sums with zero history integrate the shape functions") {
    const Mesh m = generate_structured_quad(0.01, 0.02, 5, 8);
    const auto states = make_states(m);
    const SparseSystem sys = assemble_phase(m, states, mat);
    const Eigen::VectorXd row_sums =
        sys.matrix * Eigen::VectorXd::Ones(m.num_nodes());
    double total = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i) {
      CHECK(row_sums[i] > 0.0);
      total += row_sums[i];
    }
    CHECK(total == doctest::Approx(mat.Gc / mat.l0 * 0.01 * 0.02).epsilon(1e-10));
  }
}

TEST_CASE("assembled systems are symmetric and deterministic across threads") {
  FlawSpec f;
  f.center = {0.025, 0.05};
  f.length = 5e-3;
  f.width = 1e-3;
  f.angle_deg = 45.0;
  const Mesh m = generate_flawed_mesh(0.05, 0.10, {&f, 1}, 1e-3);
  const auto mat = test_material();

  auto states = make_states(m);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uh(0.0, 1e5);
  for (auto& s : states) {
    s.H = uh(rng);
    s.strain = {uh(rng) * 1e-8, -uh(rng) * 1e-8, uh(rng) * 1e-9};
  }
  Eigen::VectorXd phi(m.num_nodes());
  std::uniform_real_distribution<double> up(0.0, 1.0);
  for (int i = 0; i < phi.size(); ++i) phi[i] = up(rng);

  const SparseSystem ku1 = assemble_displacement(m, phi, mat, states, 1);
  const SparseSystem ku4 = assemble_displacement(m, phi, mat, states, 4);
  const SparseSystem kp1 = assemble_phase(m, states, mat, 1);
  const SparseSystem kp4 = assemble_phase(m, states, mat, 4);

  const auto check_sym = [](const SparseSystem& s) {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> diff =
        s.matrix - Eigen::SparseMatrix<double, Eigen::RowMajor>(
                       s.matrix.transpose());
    double scale = 0.0, err = 0.0;
    for (int k = 0; k < s.matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s.matrix, k);
           it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    for (int k = 0; k < diff.outerSize(); ++k)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(diff, k); it;
           ++it)
        err = std::max(err, std::abs(it.value()));
    CHECK(err <= 1e-10 * scale);
  };
  check_sym(ku1);
  check_sym(kp1);

  // Bitwise agreement between serial and threaded assembly.
  CHECK((ku1.matrix - ku4.matrix).norm() == 0.0);
  CHECK((kp1.matrix - kp4.matrix).norm() == 0.0);
  CHECK((kp1.rhs - kp4.rhs).norm() == 0.0);
}

TEST_CASE("per-element modulus scales the element stiffness") {
  Mesh m = generate_structured_quad(1.0, 1.0, 2, 1);
  m.elem_modulus = {60e9, 120e9};
  const auto mat = test_material();
  const auto states = make_states(m);
  const SparseSystem sys =
      assemble_displacement(m, Eigen::VectorXd::Zero(m.num_nodes()), mat, states);
  // Node 2 (x=2rd column, bottom) belongs only to element 1; node 0 only to
  // element 0. Diagonal entries scale with the modulus ratio.
  const Eigen::MatrixXd k = Eigen::MatrixXd(sys.matrix);
  CHECK(k(2 * 2, 2 * 2) == doctest::Approx(2.0 * k(0, 0)).epsilon(1e-12));
}
