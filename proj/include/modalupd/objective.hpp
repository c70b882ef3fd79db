#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/beam.hpp"
#include "modalupd/guyan.hpp"
#include "modalupd/modal.hpp"

namespace modalupd {

// Measured (or synthesized) modal data on a subset of physical coordinates.
// coordinate_map[j] is the full-system DOF behind shape row j; those DOFs
// double as the master set whenever this data drives a reduction.
struct MeasuredModalData {
  ModalSet modal;
  std::vector<int> coordinate_map;

  int mode_count() const { return modal.mode_count(); }
  int coordinate_count() const { return modal.coordinate_count(); }

  void validate() const {
    modal.validate();
    for (int i = 0; i < modal.mode_count(); ++i) {
      if (!(modal.frequencies_hz(i) > 0.0)) {
        throw std::invalid_argument("MeasuredModalData: frequencies_hz[" + std::to_string(i) +
                                    "] must be strictly positive");
      }
    }
    if (static_cast<int>(coordinate_map.size()) != modal.coordinate_count()) {
      throw std::invalid_argument("MeasuredModalData: coordinate_map has " +
                                  std::to_string(coordinate_map.size()) + " entries for " +
                                  std::to_string(modal.coordinate_count()) + " shape rows");
    }
    std::set<int> seen;
    for (int dof : coordinate_map) {
      if (dof < 0) {
        throw std::invalid_argument("MeasuredModalData: coordinate_map entries must be non-negative");
      }
      if (!seen.insert(dof).second) {
        throw std::invalid_argument("MeasuredModalData: duplicate coordinate_map entry " +
                                    std::to_string(dof));
      }
    }
  }
};

// Gaussian prior over the flattened parameter vector, one precision alpha
// per group of parameter indices. Groups must partition all indices.
struct PriorSpec {
  Eigen::VectorXd alphas;
  std::vector<std::vector<int>> groups;
  UpdatingParameters reference;

  int group_count() const { return static_cast<int>(groups.size()); }

  void validate() const {
    reference.validate();
    if (groups.empty()) {
      throw std::invalid_argument("PriorSpec: at least one parameter group is required");
    }
    if (alphas.size() != static_cast<Eigen::Index>(groups.size())) {
      throw std::invalid_argument("PriorSpec: " + std::to_string(alphas.size()) +
                                  " alphas for " + std::to_string(groups.size()) + " groups");
    }
    for (int q = 0; q < alphas.size(); ++q) {
      if (!(alphas(q) > 0.0)) {
        throw std::invalid_argument("PriorSpec: alphas[" + std::to_string(q) +
                                    "] must be positive");
      }
    }
    const int n = reference.parameter_count();
    std::vector<int> hits(static_cast<std::size_t>(n), 0);
    for (const auto& group : groups) {
      if (group.empty()) {
        throw std::invalid_argument("PriorSpec: empty parameter group");
      }
      for (int idx : group) {
        if (idx < 0 || idx >= n) {
          throw std::invalid_argument("PriorSpec: parameter index " + std::to_string(idx) +
                                      " outside 0.." + std::to_string(n - 1));
        }
        ++hits[static_cast<std::size_t>(idx)];
      }
    }
    for (int i = 0; i < n; ++i) {
      if (hits[static_cast<std::size_t>(i)] != 1) {
        throw std::invalid_argument("PriorSpec: parameter index " + std::to_string(i) +
                                    " must appear in exactly one group");
      }
    }
  }
};

// Default grouping over [density, modulus, sections...]: density alone,
// modulus alone, plain sections together, and the drilled elements 5-6
// (1-based) as their own loosely held group when the mesh has them.
inline std::vector<int> default_drilled_elements(int element_count) {
  std::vector<int> drilled;
  if (element_count >= 5) drilled.push_back(4);
  if (element_count >= 6) drilled.push_back(5);
  return drilled;
}

inline std::vector<std::vector<int>> default_parameter_groups(int element_count) {
  if (element_count < 1) {
    throw std::invalid_argument("default_parameter_groups: element_count must be at least 1");
  }
  const std::vector<int> drilled = default_drilled_elements(element_count);
  const std::set<int> drilled_set(drilled.begin(), drilled.end());
  std::vector<std::vector<int>> groups;
  groups.push_back({0});
  groups.push_back({1});
  std::vector<int> plain;
  std::vector<int> loose;
  for (int e = 0; e < element_count; ++e) {
    if (drilled_set.count(e) > 0) {
      loose.push_back(2 + e);
    } else {
      plain.push_back(2 + e);
    }
  }
  if (!plain.empty()) groups.push_back(plain);
  if (!loose.empty()) groups.push_back(loose);
  return groups;
}

inline Eigen::VectorXd default_alphas(int group_count) {
  if (group_count < 1 || group_count > 4) {
    throw std::invalid_argument("default_alphas: expected 1 to 4 groups");
  }
  const double table[4] = {10.0, 10.0, 10.0, 0.1};
  Eigen::VectorXd alphas(group_count);
  for (int q = 0; q < group_count; ++q) {
    alphas(q) = table[q];
  }
  return alphas;
}

// Per-mode equation-of-motion residual of the measured data against a model:
// column i is (K - omega_i^2 M) phi_i / omega_i^2 with phi_i re-normalized to
// unit modal mass against this model's M. A perfect model/data match zeroes
// the matrix.
inline Eigen::MatrixXd modal_residual(const Eigen::MatrixXd& stiffness,
                                      const Eigen::MatrixXd& mass, const ModalSet& measured) {
  measured.validate();
  const Eigen::Index f = stiffness.rows();
  if (stiffness.cols() != f || mass.rows() != f || mass.cols() != f) {
    throw std::invalid_argument("modal_residual: stiffness and mass must be square and equally sized");
  }
  if (measured.coordinate_count() != f) {
    throw std::invalid_argument("modal_residual: data has " +
                                std::to_string(measured.coordinate_count()) +
                                " coordinates, model has " + std::to_string(f));
  }

  Eigen::MatrixXd residual(f, measured.mode_count());
  for (int i = 0; i < measured.mode_count(); ++i) {
    const double freq = measured.frequencies_hz(i);
    if (!(freq > 0.0)) {
      throw std::invalid_argument("modal_residual: measured frequency " + std::to_string(i) +
                                  " must be strictly positive");
    }
    Eigen::VectorXd phi = measured.shapes.col(i);
    const Eigen::VectorXd m_phi = mass * phi;
    const double modal_mass = phi.dot(m_phi);
    if (!(modal_mass > 0.0)) {
      throw std::invalid_argument("modal_residual: mode shape " + std::to_string(i) +
                                  " has non-positive modal mass");
    }
    phi /= std::sqrt(modal_mass);
    const double omega = 2.0 * std::numbers::pi * freq;
    const double omega2 = omega * omega;
    residual.col(i) = (stiffness * phi - omega2 * (mass * phi)) / omega2;
  }
  return residual;
}

// Residual of measured data against the candidate parameters, evaluated on
// the model condensed to the measured coordinates.
inline Eigen::MatrixXd error_matrix(const UpdatingParameters& params, const BeamGeometry& geometry,
                                    const MeasuredModalData& data) {
  data.validate();
  const FullSystem full = assemble(geometry, params);
  const ReducedSystem red = reduce(full, data.coordinate_map);
  return modal_residual(red.stiffness, red.mass, data.modal);
}

inline double log_likelihood(const Eigen::MatrixXd& error, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("log_likelihood: beta must be positive");
  }
  return -beta * error.squaredNorm();
}

inline double log_prior(const UpdatingParameters& params, const PriorSpec& prior) {
  prior.validate();
  if (params.parameter_count() != prior.reference.parameter_count()) {
    throw std::invalid_argument("log_prior: parameter count " +
                                std::to_string(params.parameter_count()) +
                                " does not match prior reference " +
                                std::to_string(prior.reference.parameter_count()));
  }
  const Eigen::VectorXd delta = params.to_vector() - prior.reference.to_vector();
  double total = 0.0;
  for (int q = 0; q < prior.group_count(); ++q) {
    double sum_sq = 0.0;
    for (int idx : prior.groups[static_cast<std::size_t>(q)]) {
      sum_sq += delta(idx) * delta(idx);
    }
    total -= 0.5 * prior.alphas(q) * sum_sq;
  }
  return total;
}

// Normalization constants are dropped throughout; only posterior ratios and
// rankings are ever used.
struct LogPosteriorValue {
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double log_posterior = 0.0;
  Eigen::MatrixXd error_matrix;
};

inline LogPosteriorValue log_posterior(const UpdatingParameters& params,
                                       const BeamGeometry& geometry,
                                       const MeasuredModalData& data, const PriorSpec& prior,
                                       double beta) {
  LogPosteriorValue value;
  value.error_matrix = error_matrix(params, geometry, data);
  value.log_likelihood = log_likelihood(value.error_matrix, beta);
  value.log_prior = log_prior(params, prior);
  value.log_posterior = value.log_likelihood + value.log_prior;
  return value;
}

// Closures over the flattened parameter vector for the sampler and the GA.
// Invalid parameter vectors throw; callers treat that as zero probability.
inline std::function<double(const Eigen::VectorXd&)> make_log_posterior_fn(
    const BeamGeometry& geometry, const MeasuredModalData& data, const PriorSpec& prior,
    double beta) {
  return [geometry, data, prior, beta](const Eigen::VectorXd& v) {
    const UpdatingParameters params = UpdatingParameters::from_vector(v);
    return log_posterior(params, geometry, data, prior, beta).log_posterior;
  };
}

inline std::function<double(const Eigen::VectorXd&)> make_log_likelihood_fn(
    const BeamGeometry& geometry, const MeasuredModalData& data, double beta) {
  return [geometry, data, beta](const Eigen::VectorXd& v) {
    const UpdatingParameters params = UpdatingParameters::from_vector(v);
    return log_likelihood(error_matrix(params, geometry, data), beta);
  };
}

// Forward modal prediction at the measured coordinates, matched to the
// measured modes by MAC. Shapes come back mass-normalized with the solver's
// sign convention.
struct ModalPrediction {
  Eigen::VectorXd frequencies_hz;
  Eigen::VectorXd mac_diagonal;
  Eigen::MatrixXd shapes;
};

inline ModalPrediction predict_modal(const UpdatingParameters& params,
                                     const BeamGeometry& geometry,
                                     const MeasuredModalData& data) {
  data.validate();
  const FullSystem full = assemble(geometry, params);
  const ReducedSystem red = reduce(full, data.coordinate_map);
  const ModalSet computed = solve_modes(red, 0, true);
  const std::vector<int> pairing = pair_modes(computed, data.modal);

  const int n = data.mode_count();
  ModalPrediction pred;
  pred.frequencies_hz.resize(n);
  pred.mac_diagonal.resize(n);
  pred.shapes.resize(data.coordinate_count(), n);
  for (int i = 0; i < n; ++i) {
    const int j = pairing[static_cast<std::size_t>(i)];
    pred.frequencies_hz(i) = computed.frequencies_hz(j);
    pred.mac_diagonal(i) = mac(computed.shapes.col(j), data.modal.shapes.col(i));
    pred.shapes.col(i) = computed.shapes.col(j);
  }
  return pred;
}

}  // namespace modalupd
