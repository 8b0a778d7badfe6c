#include "crackfield/material.hpp"

#include <cmath>
#include <stdexcept>

namespace crackfield {

namespace {

constexpr double kPi = 3.14159265358979323846;

double macaulay_pos(double x) { return x > 0.0 ? x : 0.0; }
double macaulay_neg(double x) { return x < 0.0 ? x : 0.0; }

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Isotropic: return "isotropic";
    case Variant::AnisotropicMiehe: return "anisotropic_miehe";
    case Variant::HybridAmbati: return "hybrid_ambati";
    case Variant::HybridCompShear: return "hybrid_comp_shear";
  }
  return "unknown";
}

double MaterialParams::friction_rad() const { return friction_deg * kPi / 180.0; }

MaterialParams MaterialParams::with_modulus(double E_new) const {
  MaterialParams m = *this;
  const double scale = E_new / E;
  m.E = E_new;
  m.lambda = lambda * scale;
  m.mu = mu * scale;
  return m;
}

std::pair<double, double> lame_from_engineering(double E, double nu) {
  if (!(E > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5))
    throw std::invalid_argument("Poisson's ratio must lie in [0, 0.5)");
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  return {lambda, mu};
}

MaterialParams make_material(double E, double nu, double Gc, double l0, double k,
                             double cohesion, double friction_deg, Variant variant) {
  auto [lambda, mu] = lame_from_engineering(E, nu);
  if (!(Gc > 0.0)) throw std::invalid_argument("Gc must be positive");
  if (!(l0 > 0.0)) throw std::invalid_argument("l0 must be positive");
  if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("k must lie in (0, 1)");
  if (!(cohesion >= 0.0)) throw std::invalid_argument("cohesion must be nonnegative");
  if (!(friction_deg >= 0.0 && friction_deg < 90.0))
    throw std::invalid_argument("friction angle must lie in [0, 90) degrees");
  MaterialParams m;
  m.E = E;
  m.nu = nu;
  m.lambda = lambda;
  m.mu = mu;
  m.Gc = Gc;
  m.l0 = l0;
  m.k = k;
  m.cohesion = cohesion;
  m.friction_deg = friction_deg;
  m.variant = variant;
  return m;
}

SpectralDecomposition spectral_split(const SymTensor2& eps) {
  // Closed-form eigen decomposition of the in-plane 2x2 block.
  const double mean = 0.5 * (eps.xx + eps.yy);
  const double diff = 0.5 * (eps.xx - eps.yy);
  const double radius = std::hypot(diff, eps.xy);
  const double lo = mean - radius;
  const double hi = mean + radius;

  const double scale = std::max({1.0, std::abs(eps.xx), std::abs(eps.yy), std::abs(eps.xy)});

  Eigen::Vector2d n_hi;
  if (radius <= 1e-15 * scale || std::abs(eps.xy) <= 1e-15 * scale) {
    // Diagonal or repeated eigenvalues: use the standard basis.
    n_hi = (eps.xx >= eps.yy) ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
  } else {
    // Pick the better conditioned eigenvector formula.
    Eigen::Vector2d a(eps.xy, hi - eps.xx);
    Eigen::Vector2d b(hi - eps.yy, eps.xy);
    n_hi = (a.squaredNorm() > b.squaredNorm()) ? a : b;
    n_hi.normalize();
  }
  const Eigen::Vector2d n_lo(-n_hi.y(), n_hi.x());

  SpectralDecomposition d;

  // Insert the zero out-of-plane principal at its sorted rank.
  std::array<double, 3> vals = {hi, lo, 0.0};
  std::array<Eigen::Vector3d, 3> dirs = {
      Eigen::Vector3d(n_hi.x(), n_hi.y(), 0.0),
      Eigen::Vector3d(n_lo.x(), n_lo.y(), 0.0),
      Eigen::Vector3d(0.0, 0.0, 1.0),
  };
  std::array<int, 3> order = {0, 1, 2};
  if (vals[2] > vals[0]) order = {2, 0, 1};
  else if (vals[2] > vals[1]) order = {0, 2, 1};
  for (int i = 0; i < 3; ++i) {
    d.principal[i] = vals[order[i]];
    d.directions.col(i) = dirs[order[i]];
  }

  const auto outer = [](const Eigen::Vector2d& n) {
    return SymTensor2{n.x() * n.x(), n.y() * n.y(), n.x() * n.y()};
  };
  d.eps_plus = outer(n_hi) * macaulay_pos(hi) + outer(n_lo) * macaulay_pos(lo);
  d.eps_minus = outer(n_hi) * macaulay_neg(hi) + outer(n_lo) * macaulay_neg(lo);
  return d;
}

double psi0(const SymTensor2& eps, const MaterialParams& mat) {
  const double tr = eps.trace();
  const double tr_sq = eps.xx * eps.xx + eps.yy * eps.yy + 2.0 * eps.xy * eps.xy;
  return 0.5 * mat.lambda * tr * tr + mat.mu * tr_sq;
}

std::pair<double, double> psi_split(const SymTensor2& eps, const MaterialParams& mat) {
  const auto d = spectral_split(eps);
  const double tr = eps.trace();
  double sq_plus = 0.0, sq_minus = 0.0;
  for (double e : d.principal) {
    sq_plus += macaulay_pos(e) * macaulay_pos(e);
    sq_minus += macaulay_neg(e) * macaulay_neg(e);
  }
  const double tp = macaulay_pos(tr);
  const double tn = macaulay_neg(tr);
  return {0.5 * mat.lambda * tp * tp + mat.mu * sq_plus,
          0.5 * mat.lambda * tn * tn + mat.mu * sq_minus};
}

double psi_p_principal(double e1, double e2, double e3, const MaterialParams& mat) {
  if (!(mat.friction_deg < 90.0))
    throw std::invalid_argument("friction angle must be below 90 degrees");

  std::array<double, 3> e = {e1, e2, e3};
  std::sort(e.begin(), e.end(), std::greater<double>());

  const std::array<double, 3> ep = {macaulay_neg(e[0]), macaulay_neg(e[1]),
                                    macaulay_neg(e[2])};
  const double vol = mat.lambda * (ep[0] + ep[1] + ep[2]);
  const double phi = mat.friction_rad();
  const double cos_phi = std::cos(phi);
  const double tan_phi = std::tan(phi);

  // Pairs with the larger principal first: the shear radius mu*(e_i - e_j)
  // stays nonnegative.
  constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  double acc = 0.0;
  for (auto [i, j] : pairs) {
    const double shear = mat.mu * (ep[i] - ep[j]) / cos_phi;
    const double normal = (vol + mat.mu * (ep[i] + ep[j])) * tan_phi;
    const double t = macaulay_pos(shear + normal - mat.cohesion);
    acc += t * t;
  }
  return acc / (2.0 * mat.mu);
}

double psi_p(const SymTensor2& eps, const MaterialParams& mat) {
  const auto d = spectral_split(eps);
  return psi_p_principal(d.principal[0], d.principal[1], d.principal[2], mat);
}

double driving_energy(const SymTensor2& eps, const MaterialParams& mat) {
  switch (mat.variant) {
    case Variant::Isotropic:
      return psi0(eps, mat);
    case Variant::AnisotropicMiehe:
    case Variant::HybridAmbati:
      return psi_split(eps, mat).first;
    case Variant::HybridCompShear:
      return psi_p(eps, mat);
  }
  return 0.0;
}

double update_history(double H_old, const SymTensor2& eps, const MaterialParams& mat) {
  return std::max(H_old, driving_energy(eps, mat));
}

double degradation(double phase, double k) {
  const double one_minus = 1.0 - phase;
  return (1.0 - k) * one_minus * one_minus + k;
}

SymTensor2 stress(const SymTensor2& eps, double phase, const MaterialParams& mat) {
  const double g = degradation(phase, mat.k);
  if (mat.variant == Variant::AnisotropicMiehe) {
    const auto d = spectral_split(eps);
    const double tr = eps.trace();
    const SymTensor2 identity{1.0, 1.0, 0.0};
    const SymTensor2 s_plus =
        identity * (mat.lambda * macaulay_pos(tr)) + d.eps_plus * (2.0 * mat.mu);
    const SymTensor2 s_minus =
        identity * (mat.lambda * macaulay_neg(tr)) + d.eps_minus * (2.0 * mat.mu);
    return s_plus * g + s_minus;
  }
  const double tr = eps.trace();
  return SymTensor2{mat.lambda * tr + 2.0 * mat.mu * eps.xx,
                    mat.lambda * tr + 2.0 * mat.mu * eps.yy, 2.0 * mat.mu * eps.xy} *
         g;
}

Eigen::Matrix3d hooke_plane_strain(double lambda, double mu) {
  Eigen::Matrix3d d;
  d << lambda + 2.0 * mu, lambda, 0.0,
       lambda, lambda + 2.0 * mu, 0.0,
       0.0, 0.0, mu;
  return d;
}

namespace {

// Voigt (engineering-shear) matrix of a minor-symmetric fourth-order tensor
// given by C[i][j][k][l] over in-plane indices.
Eigen::Matrix3d voigt_of(const double c[2][2][2][2]) {
  constexpr int idx[3][2] = {{0, 0}, {1, 1}, {0, 1}};
  Eigen::Matrix3d d;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      d(a, b) = c[idx[a][0]][idx[a][1]][idx[b][0]][idx[b][1]];
  return d;
}

// Spectral projection tensor P+ = d(eps+)/d(eps) for the in-plane 2x2 block.
// At coalescent eigenvalues the gap is perturbed to keep the mixed-mode
// coefficient finite.
Eigen::Matrix3d positive_projection_voigt(const SymTensor2& eps) {
  const auto d = spectral_split(eps);

  // Recover the two in-plane eigenpairs from the decomposition.
  double ev[2];
  Eigen::Vector2d n[2];
  int m = 0;
  for (int i = 0; i < 3 && m < 2; ++i) {
    if (std::abs(d.directions.col(i).z()) > 0.5) continue;  // out-of-plane axis
    ev[m] = d.principal[i];
    n[m] = d.directions.col(i).head<2>();
    ++m;
  }

  Eigen::Matrix2d M[2];
  double h[2];
  for (int a = 0; a < 2; ++a) {
    M[a] = n[a] * n[a].transpose();
    h[a] = ev[a] > 0.0 ? 1.0 : 0.0;
  }

  const double scale = std::max({1.0, std::abs(ev[0]), std::abs(ev[1])});
  double gap = ev[0] - ev[1];
  if (std::abs(gap) < 1e-12 * scale) gap = (gap >= 0.0 ? 1.0 : -1.0) * 1e-10 * scale;
  const double theta =
      0.5 * (macaulay_pos(ev[0]) - macaulay_pos(ev[1])) / gap;

  double c[2][2][2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double v = 0.0;
          for (int a = 0; a < 2; ++a) v += h[a] * M[a](i, j) * M[a](k, l);
          const double g01 = M[0](i, k) * M[1](j, l) + M[0](i, l) * M[1](j, k);
          const double g10 = M[1](i, k) * M[0](j, l) + M[1](i, l) * M[0](j, k);
          v += theta * (g01 + g10);
          c[i][j][k][l] = v;
        }
  return voigt_of(c);
}

}  // namespace

Eigen::Matrix3d tangent(const SymTensor2& eps, double phase, const MaterialParams& mat) {
  const double g = degradation(phase, mat.k);
  if (mat.variant != Variant::AnisotropicMiehe) {
    return g * hooke_plane_strain(mat.lambda, mat.mu);
  }

  Eigen::Matrix3d vol;
  vol << 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0;
  Eigen::Matrix3d id_sym;
  id_sym << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5;

  const Eigen::Matrix3d p_plus = positive_projection_voigt(eps);
  const Eigen::Matrix3d p_minus = id_sym - p_plus;
  const double tr = eps.trace();
  const double h_pos = tr > 0.0 ? 1.0 : 0.0;
  const double h_neg = 1.0 - h_pos;

  return g * (mat.lambda * h_pos * vol + 2.0 * mat.mu * p_plus) +
         (mat.lambda * h_neg * vol + 2.0 * mat.mu * p_minus);
}

}  // namespace crackfield
