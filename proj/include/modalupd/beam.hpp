#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace modalupd {

// Planar bending model of a uniform rectangular-section beam with free-free
// boundaries. Node i carries a transverse translation (DOF 2i) and a rotation
// (DOF 2i+1); elements are numbered left to right.

struct BeamGeometry {
  double length = 1.0;              // m
  double width = 25.4e-3;           // m
  double thickness = 13.4e-3;       // m, bending direction
  int element_count = 12;
  double nominal_modulus = 7.0e10;  // Pa
  double nominal_density = 2700.0;  // kg/m^3

  int node_count() const { return element_count + 1; }
  int dof_count() const { return 2 * node_count(); }
  double element_length() const { return length / element_count; }
  double section_area() const { return width * thickness; }
  double section_inertia() const { return width * thickness * thickness * thickness / 12.0; }

  void validate() const {
    require_positive(length, "length");
    require_positive(width, "width");
    require_positive(thickness, "thickness");
    require_positive(nominal_modulus, "nominal_modulus");
    require_positive(nominal_density, "nominal_density");
    if (element_count < 1) {
      throw std::invalid_argument("BeamGeometry: element_count must be at least 1");
    }
  }

 private:
  static void require_positive(double value, const char* name) {
    if (!(value > 0.0)) {
      throw std::invalid_argument(std::string("BeamGeometry: ") + name + " must be positive");
    }
  }
};

// Dimensionless multipliers on the nominal properties. density_scale and
// modulus_scale act globally, section_scales act per element on both the
// area and the second moment (a thinned element loses mass and stiffness
// in proportion).
struct UpdatingParameters {
  double density_scale = 1.0;
  double modulus_scale = 1.0;
  Eigen::VectorXd section_scales;

  static UpdatingParameters nominal(int element_count) {
    UpdatingParameters p;
    p.section_scales = Eigen::VectorXd::Ones(element_count);
    return p;
  }

  int element_count() const { return static_cast<int>(section_scales.size()); }
  int parameter_count() const { return element_count() + 2; }

  // Canonical flattening: [density_scale, modulus_scale, section_scales...].
  Eigen::VectorXd to_vector() const {
    Eigen::VectorXd v(parameter_count());
    v(0) = density_scale;
    v(1) = modulus_scale;
    v.tail(element_count()) = section_scales;
    return v;
  }

  static UpdatingParameters from_vector(const Eigen::VectorXd& v) {
    if (v.size() < 3) {
      throw std::invalid_argument(
          "UpdatingParameters: parameter vector needs density, modulus and at least one section scale");
    }
    UpdatingParameters p;
    p.density_scale = v(0);
    p.modulus_scale = v(1);
    p.section_scales = v.tail(v.size() - 2);
    return p;
  }

  void validate() const {
    if (!(density_scale > 0.0)) {
      throw std::invalid_argument("UpdatingParameters: density_scale must be positive");
    }
    if (!(modulus_scale > 0.0)) {
      throw std::invalid_argument("UpdatingParameters: modulus_scale must be positive");
    }
    if (section_scales.size() < 1) {
      throw std::invalid_argument("UpdatingParameters: at least one section scale is required");
    }
    for (int i = 0; i < section_scales.size(); ++i) {
      if (!(section_scales(i) > 0.0)) {
        throw std::invalid_argument("UpdatingParameters: section_scales[" + std::to_string(i) +
                                    "] must be positive");
      }
    }
  }
};

struct ElementMatrices {
  Eigen::Matrix4d stiffness;
  Eigen::Matrix4d mass;
};

// Consistent two-node bending element over (v1, theta1, v2, theta2), cubic
// transverse interpolation. flexural_rigidity is EI, mass_per_length is
// rho*A.
inline ElementMatrices element_matrices(double flexural_rigidity, double mass_per_length,
                                        double length) {
  if (!(flexural_rigidity > 0.0)) {
    throw std::invalid_argument("element_matrices: flexural_rigidity must be positive");
  }
  if (!(mass_per_length > 0.0)) {
    throw std::invalid_argument("element_matrices: mass_per_length must be positive");
  }
  if (!(length > 0.0)) {
    throw std::invalid_argument("element_matrices: length must be positive");
  }

  const double l = length;
  const double l2 = l * l;

  ElementMatrices out;
  out.stiffness << 12.0,     6.0 * l,  -12.0,     6.0 * l,
                   6.0 * l,  4.0 * l2, -6.0 * l,  2.0 * l2,
                   -12.0,    -6.0 * l, 12.0,      -6.0 * l,
                   6.0 * l,  2.0 * l2, -6.0 * l,  4.0 * l2;
  out.stiffness *= flexural_rigidity / (l2 * l);

  out.mass << 156.0,     22.0 * l,  54.0,      -13.0 * l,
              22.0 * l,  4.0 * l2,  13.0 * l,  -3.0 * l2,
              54.0,      13.0 * l,  156.0,     -22.0 * l,
              -13.0 * l, -3.0 * l2, -22.0 * l, 4.0 * l2;
  out.mass *= mass_per_length * l / 420.0;
  return out;
}

struct FullSystem {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;

  int dof_count() const { return static_cast<int>(mass.rows()); }
};

struct DofRef {
  int node;
  bool is_rotation;
};

inline DofRef dof_ref(int dof_index) { return DofRef{dof_index / 2, dof_index % 2 != 0}; }

inline std::vector<int> translation_dofs(const BeamGeometry& geometry) {
  std::vector<int> dofs(static_cast<std::size_t>(geometry.node_count()));
  for (int i = 0; i < geometry.node_count(); ++i) {
    dofs[static_cast<std::size_t>(i)] = 2 * i;
  }
  return dofs;
}

// Global free-free matrices. No boundary conditions are applied, so the
// stiffness keeps its two rigid-body modes (translation and rotation).
inline FullSystem assemble(const BeamGeometry& geometry, const UpdatingParameters& params) {
  geometry.validate();
  params.validate();
  if (params.element_count() != geometry.element_count) {
    throw std::invalid_argument("assemble: parameter set has " +
                                std::to_string(params.element_count()) +
                                " section scales, geometry has " +
                                std::to_string(geometry.element_count) + " elements");
  }

  const int n = geometry.dof_count();
  FullSystem sys;
  sys.mass = Eigen::MatrixXd::Zero(n, n);
  sys.stiffness = Eigen::MatrixXd::Zero(n, n);

  const double nominal_ei = geometry.nominal_modulus * geometry.section_inertia();
  const double nominal_rho_a = geometry.nominal_density * geometry.section_area();
  for (int e = 0; e < geometry.element_count; ++e) {
    const double section = params.section_scales(e);
    const double ei = params.modulus_scale * section * nominal_ei;
    const double rho_a = params.density_scale * section * nominal_rho_a;
    const ElementMatrices elem = element_matrices(ei, rho_a, geometry.element_length());
    const int base = 2 * e;
    sys.stiffness.block<4, 4>(base, base) += elem.stiffness;
    sys.mass.block<4, 4>(base, base) += elem.mass;
  }
  return sys;
}

}  // namespace modalupd
