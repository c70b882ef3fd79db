#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/beam.hpp"

namespace modalupd {

enum class ShapeNormalization { MassNormalized, UnitLength, Raw };

// Modal table: frequencies ascending, shapes column per mode over F
// physical coordinates.
struct ModalSet {
  Eigen::VectorXd frequencies_hz;
  Eigen::MatrixXd shapes;
  ShapeNormalization normalization = ShapeNormalization::Raw;

  int mode_count() const { return static_cast<int>(frequencies_hz.size()); }
  int coordinate_count() const { return static_cast<int>(shapes.rows()); }

  void validate() const {
    if (frequencies_hz.size() < 1) {
      throw std::invalid_argument("ModalSet: at least one mode is required");
    }
    if (shapes.cols() != frequencies_hz.size()) {
      throw std::invalid_argument("ModalSet: shape column count " + std::to_string(shapes.cols()) +
                                  " does not match frequency count " +
                                  std::to_string(frequencies_hz.size()));
    }
    if (shapes.rows() < 1) {
      throw std::invalid_argument("ModalSet: shapes need at least one coordinate row");
    }
    for (int i = 0; i < frequencies_hz.size(); ++i) {
      if (!(frequencies_hz(i) >= 0.0)) {
        throw std::invalid_argument("ModalSet: frequencies_hz[" + std::to_string(i) +
                                    "] must be non-negative");
      }
      if (i > 0 && frequencies_hz(i) < frequencies_hz(i - 1)) {
        throw std::invalid_argument("ModalSet: frequencies_hz must be sorted ascending");
      }
    }
  }
};

// Eigenvalues below this fraction of the largest one count as rigid-body
// content and can be discarded.
inline constexpr double rigid_mode_tolerance = 1e-8;

// Generalized symmetric problem K phi = omega^2 M phi, M positive definite.
// M = L L^T turns it into the standard symmetric problem on
// C = L^-1 K L^-T; eigenvectors map back through L^-T and come out
// mass-normalized (phi^T M phi = 1). Sign convention: the entry of largest
// magnitude in each shape is positive.
//
// With drop_rigid, eigenvalues under rigid_mode_tolerance times the largest
// are discarded before counting (a free-free beam has exactly two).
// n_modes == 0 requests every mode that remains.
inline ModalSet solve_modes(const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass,
                            int n_modes, bool drop_rigid) {
  const Eigen::Index n = stiffness.rows();
  if (stiffness.cols() != n || mass.rows() != n || mass.cols() != n) {
    throw std::invalid_argument("solve_modes: stiffness and mass must be square and equally sized");
  }
  if (n < 1) {
    throw std::invalid_argument("solve_modes: empty system");
  }
  if (n_modes < 0) {
    throw std::invalid_argument("solve_modes: n_modes must be non-negative");
  }

  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("solve_modes: mass matrix is not positive definite");
  }

  const Eigen::MatrixXd half = llt.matrixL().solve(stiffness);
  Eigen::MatrixXd reduced = llt.matrixL().solve(half.transpose());
  reduced = 0.5 * (reduced + reduced.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(reduced);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("solve_modes: symmetric eigen-solver failed to converge");
  }
  const Eigen::VectorXd lambda = solver.eigenvalues();

  Eigen::Index dropped = 0;
  if (drop_rigid) {
    const double tol = rigid_mode_tolerance * lambda.cwiseAbs().maxCoeff();
    while (dropped < n && lambda(dropped) < tol) {
      ++dropped;
    }
  }
  const Eigen::Index available = n - dropped;
  if (n_modes == 0) {
    n_modes = static_cast<int>(available);
  }
  if (n_modes > available) {
    throw std::invalid_argument("solve_modes: requested " + std::to_string(n_modes) +
                                " modes but only " + std::to_string(available) +
                                " remain after discarding rigid-body content");
  }

  ModalSet out;
  out.frequencies_hz.resize(n_modes);
  out.shapes.resize(n, n_modes);
  out.normalization = ShapeNormalization::MassNormalized;
  for (int i = 0; i < n_modes; ++i) {
    const Eigen::Index k = dropped + i;
    const double omega2 = std::max(lambda(k), 0.0);
    out.frequencies_hz(i) = std::sqrt(omega2) / (2.0 * std::numbers::pi);
    Eigen::VectorXd phi =
        llt.matrixL().transpose().solve(solver.eigenvectors().col(k));
    Eigen::Index peak = 0;
    phi.cwiseAbs().maxCoeff(&peak);
    if (phi(peak) < 0.0) {
      phi = -phi;
    }
    out.shapes.col(i) = phi;
  }
  return out;
}

inline ModalSet solve_modes(const FullSystem& system, int n_modes, bool drop_rigid = true) {
  return solve_modes(system.stiffness, system.mass, n_modes, drop_rigid);
}

// Modal assurance criterion between two real shape vectors, in [0, 1].
inline double mac(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("mac: shape vectors must have equal length");
  }
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("mac: zero mode shape vector");
  }
  const double num = a.dot(b);
  return std::clamp(num * num / (na * nb), 0.0, 1.0);
}

struct MacTable {
  Eigen::MatrixXd values;  // rows: modes of a, cols: modes of b
};

inline MacTable mac_table(const ModalSet& a, const ModalSet& b) {
  if (a.coordinate_count() != b.coordinate_count()) {
    throw std::invalid_argument("mac_table: modal sets live on different coordinate counts");
  }
  MacTable table;
  table.values.resize(a.mode_count(), b.mode_count());
  for (int i = 0; i < a.mode_count(); ++i) {
    for (int j = 0; j < b.mode_count(); ++j) {
      table.values(i, j) = mac(a.shapes.col(i), b.shapes.col(j));
    }
  }
  return table;
}

// Greedy one-to-one assignment by descending MAC. Entry i of the result is
// the computed-mode index matched to measured mode i. Ties resolve to the
// lowest measured index, then the lowest computed index.
inline std::vector<int> pair_modes(const ModalSet& computed, const ModalSet& measured) {
  if (computed.coordinate_count() != measured.coordinate_count()) {
    throw std::invalid_argument("pair_modes: modal sets live on different coordinate counts");
  }
  if (computed.mode_count() < measured.mode_count()) {
    throw std::invalid_argument("pair_modes: fewer computed modes (" +
                                std::to_string(computed.mode_count()) + ") than measured (" +
                                std::to_string(measured.mode_count()) + ")");
  }

  const MacTable table = mac_table(measured, computed);
  const int n_measured = measured.mode_count();
  const int n_computed = computed.mode_count();
  std::vector<int> pairing(static_cast<std::size_t>(n_measured), -1);
  std::vector<bool> measured_done(static_cast<std::size_t>(n_measured), false);
  std::vector<bool> computed_used(static_cast<std::size_t>(n_computed), false);

  for (int step = 0; step < n_measured; ++step) {
    double best = -1.0;
    int best_i = -1;
    int best_j = -1;
    for (int i = 0; i < n_measured; ++i) {
      if (measured_done[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < n_computed; ++j) {
        if (computed_used[static_cast<std::size_t>(j)]) continue;
        if (table.values(i, j) > best) {
          best = table.values(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }
    pairing[static_cast<std::size_t>(best_i)] = best_j;
    measured_done[static_cast<std::size_t>(best_i)] = true;
    computed_used[static_cast<std::size_t>(best_j)] = true;
  }
  return pairing;
}

}  // namespace modalupd
