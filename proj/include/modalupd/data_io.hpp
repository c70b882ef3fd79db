#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/beam.hpp"
#include "modalupd/fsutil.hpp"
#include "modalupd/guyan.hpp"
#include "modalupd/modal.hpp"
#include "modalupd/objective.hpp"

namespace modalupd {

namespace detail {

// Loader canonicalization: modes sorted by ascending frequency, shape
// columns permuted along.
inline void sort_by_frequency(ModalSet& modal) {
  const int n = modal.mode_count();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return modal.frequencies_hz(a) < modal.frequencies_hz(b);
  });
  Eigen::VectorXd freqs(n);
  Eigen::MatrixXd shapes(modal.shapes.rows(), n);
  for (int i = 0; i < n; ++i) {
    freqs(i) = modal.frequencies_hz(order[static_cast<std::size_t>(i)]);
    shapes.col(i) = modal.shapes.col(order[static_cast<std::size_t>(i)]);
  }
  modal.frequencies_hz = freqs;
  modal.shapes = shapes;
}

}  // namespace detail

inline MeasuredModalData measured_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("measured data: top level must be a JSON object");
  }
  for (const char* key : {"frequencies_hz", "shapes", "coordinate_map"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("measured data: missing key '") + key + "'");
    }
  }

  const auto& freqs = j["frequencies_hz"];
  if (!freqs.is_array() || freqs.empty()) {
    throw std::invalid_argument("measured data: frequencies_hz must be a non-empty array");
  }
  const int n_modes = static_cast<int>(freqs.size());

  const auto& shapes = j["shapes"];
  if (!shapes.is_array() || shapes.empty()) {
    throw std::invalid_argument("measured data: shapes must be a non-empty array of rows");
  }
  const int n_coords = static_cast<int>(shapes.size());

  MeasuredModalData data;
  data.modal.frequencies_hz.resize(n_modes);
  for (int i = 0; i < n_modes; ++i) {
    const auto& value = freqs[static_cast<std::size_t>(i)];
    if (!value.is_number()) {
      throw std::invalid_argument("measured data: frequencies_hz[" + std::to_string(i) +
                                  "] must be a number");
    }
    const double f = value.get<double>();
    if (!(f > 0.0)) {
      throw std::invalid_argument("measured data: frequencies_hz[" + std::to_string(i) +
                                  "] must be strictly positive");
    }
    data.modal.frequencies_hz(i) = f;
  }

  data.modal.shapes.resize(n_coords, n_modes);
  for (int r = 0; r < n_coords; ++r) {
    const auto& row = shapes[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n_modes) {
      throw std::invalid_argument("measured data: shapes row " + std::to_string(r) + " has " +
                                  std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(n_modes));
    }
    for (int c = 0; c < n_modes; ++c) {
      const auto& value = row[static_cast<std::size_t>(c)];
      if (!value.is_number()) {
        throw std::invalid_argument("measured data: shapes[" + std::to_string(r) + "][" +
                                    std::to_string(c) + "] must be a number");
      }
      data.modal.shapes(r, c) = value.get<double>();
    }
  }

  const auto& coord_map = j["coordinate_map"];
  if (!coord_map.is_array() || static_cast<int>(coord_map.size()) != n_coords) {
    throw std::invalid_argument("measured data: coordinate_map must list one DOF per shape row");
  }
  for (std::size_t k = 0; k < coord_map.size(); ++k) {
    if (!coord_map[k].is_number_integer()) {
      throw std::invalid_argument("measured data: coordinate_map[" + std::to_string(k) +
                                  "] must be an integer");
    }
    data.coordinate_map.push_back(coord_map[k].get<int>());
  }

  data.modal.normalization = ShapeNormalization::Raw;
  detail::sort_by_frequency(data.modal);
  data.validate();
  return data;
}

inline nlohmann::json measured_to_json(const MeasuredModalData& data,
                                       const nlohmann::json& metadata = nlohmann::json()) {
  data.validate();
  nlohmann::json j;
  nlohmann::json freqs = nlohmann::json::array();
  for (int i = 0; i < data.mode_count(); ++i) {
    freqs.push_back(data.modal.frequencies_hz(i));
  }
  nlohmann::json shapes = nlohmann::json::array();
  for (int r = 0; r < data.coordinate_count(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < data.mode_count(); ++c) {
      row.push_back(data.modal.shapes(r, c));
    }
    shapes.push_back(row);
  }
  j["frequencies_hz"] = freqs;
  j["shapes"] = shapes;
  j["coordinate_map"] = data.coordinate_map;
  if (!metadata.is_null() && !metadata.empty()) {
    j["metadata"] = metadata;
  }
  return j;
}

inline MeasuredModalData load_measured(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("measured data file not found: " + path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("measured data: " + path + ": " + e.what());
  }
  return measured_from_json(j);
}

inline void save_measured(const MeasuredModalData& data, const std::string& path,
                          const nlohmann::json& metadata = nlohmann::json()) {
  atomic_write(path, measured_to_json(data, metadata).dump(2) + "\n");
}

struct NoiseSpec {
  double freq_rel = 0.0;   // relative sigma on each frequency
  double shape_rel = 0.0;  // sigma on each shape entry, relative to the mode's RMS
};

// Modal data of a truth model at the master DOFs, optionally corrupted by
// Gaussian noise. Frequencies draw first, then shape entries mode by mode,
// so a given seed always produces the same dataset.
inline MeasuredModalData synth_measured(const UpdatingParameters& truth,
                                        const BeamGeometry& geometry,
                                        const std::vector<int>& masters, int n_modes,
                                        const NoiseSpec& noise, std::uint64_t seed) {
  if (n_modes < 1) {
    throw std::invalid_argument("synth_measured: n_modes must be at least 1");
  }
  if (!(noise.freq_rel >= 0.0) || !(noise.shape_rel >= 0.0)) {
    throw std::invalid_argument("synth_measured: noise levels must be non-negative");
  }
  const FullSystem full = assemble(geometry, truth);
  const ReducedSystem red = reduce(full, masters);
  const ModalSet clean = solve_modes(red, n_modes, true);

  MeasuredModalData data;
  data.modal = clean;
  data.modal.normalization = ShapeNormalization::Raw;
  data.coordinate_map = masters;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit;
  if (noise.freq_rel > 0.0) {
    for (int i = 0; i < n_modes; ++i) {
      const double clean_f = data.modal.frequencies_hz(i);
      const double noisy = clean_f * (1.0 + noise.freq_rel * unit(rng));
      data.modal.frequencies_hz(i) = std::max(noisy, 1e-6 * clean_f);
    }
  }
  if (noise.shape_rel > 0.0) {
    const int f = data.coordinate_count();
    for (int i = 0; i < n_modes; ++i) {
      const double rms = data.modal.shapes.col(i).norm() / std::sqrt(static_cast<double>(f));
      for (int r = 0; r < f; ++r) {
        data.modal.shapes(r, i) += noise.shape_rel * rms * unit(rng);
      }
    }
  }

  detail::sort_by_frequency(data.modal);
  data.validate();
  return data;
}

inline nlohmann::json synth_metadata(const UpdatingParameters& truth, const NoiseSpec& noise,
                                     std::uint64_t seed) {
  nlohmann::json truth_json;
  truth_json["density_scale"] = truth.density_scale;
  truth_json["modulus_scale"] = truth.modulus_scale;
  nlohmann::json sections = nlohmann::json::array();
  for (int e = 0; e < truth.element_count(); ++e) {
    sections.push_back(truth.section_scales(e));
  }
  truth_json["section_scales"] = sections;
  return nlohmann::json{{"source", "synthetic"},
                        {"truth", truth_json},
                        {"noise", {{"freq_rel", noise.freq_rel}, {"shape_rel", noise.shape_rel}}},
                        {"seed", seed}};
}

}  // namespace modalupd
