#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/beam.hpp"
#include "modalupd/modal.hpp"

namespace modalupd {

// Static condensation of the full system onto a set of master DOFs. The
// transformation interpolates slave motion statically: T keeps identity rows
// at the masters and -Kss^-1 Ksm at the slaves. Reduced coordinate j is the
// full-system DOF master_indices[j], in the given order.
struct ReducedSystem {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd transformation;  // full x reduced
  std::vector<int> master_indices;

  int dof_count() const { return static_cast<int>(mass.rows()); }
};

inline constexpr double slave_condition_limit = 1e12;

inline ReducedSystem reduce(const FullSystem& system, const std::vector<int>& master_indices) {
  const int n = system.dof_count();
  if (system.stiffness.rows() != n || system.stiffness.cols() != n || system.mass.cols() != n) {
    throw std::invalid_argument("reduce: mass and stiffness must be square and equally sized");
  }
  if (master_indices.empty()) {
    throw std::invalid_argument("reduce: master set must not be empty");
  }
  std::set<int> seen;
  for (int idx : master_indices) {
    if (idx < 0 || idx >= n) {
      throw std::invalid_argument("reduce: master index " + std::to_string(idx) +
                                  " outside DOF range 0.." + std::to_string(n - 1));
    }
    if (!seen.insert(idx).second) {
      throw std::invalid_argument("reduce: duplicate master index " + std::to_string(idx));
    }
  }

  std::vector<int> slaves;
  slaves.reserve(static_cast<std::size_t>(n) - master_indices.size());
  for (int i = 0; i < n; ++i) {
    if (seen.find(i) == seen.end()) {
      slaves.push_back(i);
    }
  }

  const int m = static_cast<int>(master_indices.size());
  const int s = static_cast<int>(slaves.size());

  ReducedSystem red;
  red.master_indices = master_indices;

  if (s == 0) {
    // Every DOF is a master: the reduction is a permutation.
    red.transformation = Eigen::MatrixXd::Zero(n, m);
    for (int j = 0; j < m; ++j) {
      red.transformation(master_indices[static_cast<std::size_t>(j)], j) = 1.0;
    }
    red.stiffness = red.transformation.transpose() * system.stiffness * red.transformation;
    red.mass = red.transformation.transpose() * system.mass * red.transformation;
    return red;
  }

  Eigen::MatrixXd k_ss(s, s);
  Eigen::MatrixXd k_sm(s, m);
  Eigen::MatrixXd k_mm(m, m);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      k_ss(i, j) = system.stiffness(slaves[static_cast<std::size_t>(i)],
                                    slaves[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < m; ++j) {
      k_sm(i, j) = system.stiffness(slaves[static_cast<std::size_t>(i)],
                                    master_indices[static_cast<std::size_t>(j)]);
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      k_mm(i, j) = system.stiffness(master_indices[static_cast<std::size_t>(i)],
                                    master_indices[static_cast<std::size_t>(j)]);
    }
  }

  // A singular slave block means the masters fail to carry the rigid-body
  // content; refuse rather than return garbage.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(k_ss, Eigen::EigenvaluesOnly);
  if (spectrum.info() != Eigen::Success) {
    throw std::runtime_error("reduce: failed to factor the slave-slave stiffness block");
  }
  const double eig_max = spectrum.eigenvalues().cwiseAbs().maxCoeff();
  const double eig_min = spectrum.eigenvalues().cwiseAbs().minCoeff();
  if (!(eig_min > 0.0) || eig_max / eig_min > slave_condition_limit) {
    throw std::runtime_error(
        "reduce: slave-slave stiffness block is numerically singular; master set must carry the "
        "rigid-body content");
  }

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(k_ss);
  const Eigen::MatrixXd slave_map = ldlt.solve(k_sm);  // Kss^-1 Ksm

  red.transformation = Eigen::MatrixXd::Zero(n, m);
  for (int j = 0; j < m; ++j) {
    red.transformation(master_indices[static_cast<std::size_t>(j)], j) = 1.0;
  }
  for (int i = 0; i < s; ++i) {
    red.transformation.row(slaves[static_cast<std::size_t>(i)]) = -slave_map.row(i);
  }

  red.stiffness = k_mm - k_sm.transpose() * slave_map;
  red.stiffness = 0.5 * (red.stiffness + red.stiffness.transpose()).eval();
  red.mass = red.transformation.transpose() * system.mass * red.transformation;
  red.mass = 0.5 * (red.mass + red.mass.transpose()).eval();
  return red;
}

// Lifts a reduced-space shape back to the full DOF set.
inline Eigen::VectorXd expand(const Eigen::VectorXd& reduced_shape,
                              const Eigen::MatrixXd& transformation) {
  if (transformation.cols() != reduced_shape.size()) {
    throw std::invalid_argument("expand: shape length " + std::to_string(reduced_shape.size()) +
                                " does not match transformation column count " +
                                std::to_string(transformation.cols()));
  }
  return transformation * reduced_shape;
}

inline ModalSet solve_modes(const ReducedSystem& system, int n_modes, bool drop_rigid = true) {
  return solve_modes(system.stiffness, system.mass, n_modes, drop_rigid);
}

}  // namespace modalupd
