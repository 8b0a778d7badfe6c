#pragma once

#include <Eigen/Dense>

#include <array>
#include <utility>

namespace crackfield {

/// Symmetric in-plane 2x2 tensor (plane strain). `xy` is the tensor
/// component, not the engineering shear.
struct SymTensor2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  double trace() const { return xx + yy; }

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d m;
    m << xx, xy, xy, yy;
    return m;
  }

  static SymTensor2 from_matrix(const Eigen::Matrix2d& m) {
    return {m(0, 0), m(1, 1), 0.5 * (m(0, 1) + m(1, 0))};
  }

  /// Voigt vector [xx, yy, 2*xy] (engineering shear).
  Eigen::Vector3d voigt() const { return {xx, yy, 2.0 * xy}; }

  static SymTensor2 from_voigt(const Eigen::Vector3d& v) {
    return {v[0], v[1], 0.5 * v[2]};
  }

  SymTensor2 operator+(const SymTensor2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }
  SymTensor2 operator-(const SymTensor2& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy}; }
  SymTensor2 operator*(double s) const { return {xx * s, yy * s, xy * s}; }

  /// Double contraction with another symmetric tensor.
  double ddot(const SymTensor2& o) const { return xx * o.xx + yy * o.yy + 2.0 * xy * o.xy; }
};

enum class Variant {
  Isotropic,
  AnisotropicMiehe,
  HybridAmbati,
  HybridCompShear,
};

const char* variant_name(Variant v);

struct MaterialParams {
  double E = 0.0;             // Young's modulus [Pa]
  double nu = 0.0;            // Poisson's ratio
  double lambda = 0.0;        // first Lame constant [Pa]
  double mu = 0.0;            // shear modulus [Pa]
  double Gc = 0.0;            // critical energy release rate [N/m]
  double l0 = 0.0;            // regularization length scale [m]
  double k = 0.0;             // residual stiffness parameter
  double cohesion = 0.0;      // cohesion c [Pa]
  double friction_deg = 0.0;  // internal friction angle [deg]
  Variant variant = Variant::HybridCompShear;

  double friction_rad() const;

  /// Same material with Young's modulus replaced by `E_new` (Lame constants
  /// rescale, everything else untouched). Used for per-element modulus fields.
  MaterialParams with_modulus(double E_new) const;
};

/// Validates inputs and derives the Lame constants.
MaterialParams make_material(double E, double nu, double Gc, double l0, double k,
                             double cohesion, double friction_deg, Variant variant);

/// lambda = E*nu/((1+nu)(1-2nu)), mu = E/(2(1+nu)). Rejects nu >= 0.5.
std::pair<double, double> lame_from_engineering(double E, double nu);

/// Spectral decomposition of a plane-strain state. The out-of-plane
/// principal strain is identically zero and is inserted into the sorted
/// triple at its proper rank; its direction is the out-of-plane axis.
struct SpectralDecomposition {
  std::array<double, 3> principal{};  // sorted descending
  Eigen::Matrix3d directions;         // columns = principal directions, orthonormal
  SymTensor2 eps_plus;                // in-plane tensile part
  SymTensor2 eps_minus;               // in-plane compressive part
};

SpectralDecomposition spectral_split(const SymTensor2& eps);

/// Undegraded isotropic energy density: lambda/2*tr(eps)^2 + mu*tr(eps^2).
double psi0(const SymTensor2& eps, const MaterialParams& mat);

/// Tensile/compressive split energies
/// psi± = lambda/2*<tr eps>±^2 + mu*tr(eps±^2).
std::pair<double, double> psi_split(const SymTensor2& eps, const MaterialParams& mat);

/// Compressive-shear driving energy built from the negative principal
/// strains with cohesion and internal friction. Principals may be passed in
/// any order; they are sorted descending and the three pairs are taken with
/// the larger principal first, which keeps the shear radius nonnegative.
double psi_p_principal(double e1, double e2, double e3, const MaterialParams& mat);

double psi_p(const SymTensor2& eps, const MaterialParams& mat);

/// Crack driving energy of the selected variant at the given strain.
double driving_energy(const SymTensor2& eps, const MaterialParams& mat);

/// History update H_new = max(H_old, driving_energy). Never decreases.
double update_history(double H_old, const SymTensor2& eps, const MaterialParams& mat);

/// Degradation g(phi) = (1-k)(1-phi)^2 + k.
double degradation(double phase, double k);

/// Cauchy stress (in-plane part). Hybrid/isotropic variants degrade the full
/// Hooke stress; the anisotropic variant degrades only the tensile branch.
SymTensor2 stress(const SymTensor2& eps, double phase, const MaterialParams& mat);

/// 3x3 plane-strain constitutive matrix acting on Voigt strain
/// [eps_xx, eps_yy, gamma_xy]. The anisotropic variant returns the
/// algorithmic spectral tangent.
Eigen::Matrix3d tangent(const SymTensor2& eps, double phase, const MaterialParams& mat);

/// Plane-strain Hooke matrix for the given Lame constants.
Eigen::Matrix3d hooke_plane_strain(double lambda, double mu);

}  // namespace crackfield
