#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/config.hpp"
#include "modalupd/data_io.hpp"
#include "modalupd/genetic.hpp"
#include "modalupd/metropolis.hpp"
#include "modalupd/objective.hpp"

namespace modalupd {

namespace detail {

// Report-grade numbers carry 6 significant digits; chain samples are stored
// with full precision because predictions get rebuilt from them.
inline std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return std::string(buffer);
}

inline std::string format_full(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return std::string(buffer);
}

}  // namespace detail

// Per-mode comparison table: measured data against the initial model and
// the updated estimate. The std columns stay empty for point estimates.
struct UpdateReport {
  std::string method;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::size_t skipped = 0;
  Eigen::VectorXd measured_hz;
  Eigen::VectorXd initial_hz;
  Eigen::VectorXd updated_hz;
  Eigen::VectorXd updated_std_hz;  // empty for point estimates
  Eigen::VectorXd initial_mac;
  Eigen::VectorXd updated_mac;
  Eigen::VectorXd updated_std_mac;  // empty for point estimates

  int mode_count() const { return static_cast<int>(measured_hz.size()); }
  bool has_spread() const { return updated_std_hz.size() > 0; }
};

inline std::string report_to_csv(const UpdateReport& report) {
  std::ostringstream out;
  out << "# method=" << report.method << "\n";
  out << "# seed=" << report.seed << "\n";
  out << "# config_digest=" << report.config_digest << "\n";
  out << "# skipped_samples=" << report.skipped << "\n";
  out << "mode,measured_hz,initial_hz,updated_hz,updated_std_hz,initial_mac,updated_mac,"
         "updated_std_mac\n";
  for (int i = 0; i < report.mode_count(); ++i) {
    out << (i + 1) << ',' << detail::format_number(report.measured_hz(i)) << ','
        << detail::format_number(report.initial_hz(i)) << ','
        << detail::format_number(report.updated_hz(i)) << ','
        << (report.has_spread() ? detail::format_number(report.updated_std_hz(i)) : "") << ','
        << detail::format_number(report.initial_mac(i)) << ','
        << detail::format_number(report.updated_mac(i)) << ','
        << (report.has_spread() ? detail::format_number(report.updated_std_mac(i)) : "") << "\n";
  }
  return out.str();
}

inline void write_report_csv(const UpdateReport& report, const std::string& path) {
  atomic_write(path, report_to_csv(report));
}

inline std::string chain_to_csv(const Chain& chain, int element_count) {
  std::ostringstream out;
  out << "# seed=" << chain.seed << "\n";
  out << "# acceptance_rate=" << detail::format_full(chain.acceptance_rate) << "\n";
  out << "# invalid_proposals=" << chain.invalid_proposals << "\n";
  out << "density_scale,modulus_scale";
  for (int e = 0; e < element_count; ++e) {
    out << ",section_scale_" << (e + 1);
  }
  out << ",log_posterior\n";
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    const Eigen::VectorXd& x = chain.samples[s];
    if (x.size() != element_count + 2) {
      throw std::invalid_argument("chain_to_csv: sample dimension " + std::to_string(x.size()) +
                                  " does not match element count " +
                                  std::to_string(element_count));
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      out << (i > 0 ? "," : "") << detail::format_full(x(i));
    }
    out << ',' << detail::format_full(chain.log_posteriors[s]) << "\n";
  }
  return out.str();
}

inline void write_chain_csv(const Chain& chain, int element_count, const std::string& path) {
  atomic_write(path, chain_to_csv(chain, element_count));
}

inline Chain read_chain_csv(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("chain file not found: " + path);
  }
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open chain file: " + path);
  }

  Chain chain;
  std::string line;
  bool header_seen = false;
  Eigen::Index n_params = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        const std::string key = line.substr(2, eq - 2);
        const std::string value = line.substr(eq + 1);
        if (key == "seed") chain.seed = std::stoull(value);
        if (key == "acceptance_rate") chain.acceptance_rate = std::stod(value);
        if (key == "invalid_proposals") chain.invalid_proposals = std::stoull(value);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      n_params = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
      if (n_params < 3) {
        throw std::runtime_error("chain file " + path + ": malformed column header");
      }
      continue;
    }
    std::vector<double> values;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("chain file " + path + ": line " + std::to_string(line_no) +
                                 ": '" + cell + "' is not a number");
      }
    }
    if (static_cast<Eigen::Index>(values.size()) != n_params + 1) {
      throw std::runtime_error("chain file " + path + ": line " + std::to_string(line_no) +
                               " has " + std::to_string(values.size()) + " cells, expected " +
                               std::to_string(n_params + 1));
    }
    Eigen::VectorXd sample(n_params);
    for (Eigen::Index i = 0; i < n_params; ++i) {
      sample(i) = values[static_cast<std::size_t>(i)];
    }
    chain.samples.push_back(sample);
    chain.log_posteriors.push_back(values.back());
  }
  if (chain.samples.empty()) {
    throw std::runtime_error("chain file " + path + ": no samples");
  }
  return chain;
}

inline std::string ga_history_to_csv(const GaResult& result) {
  std::ostringstream out;
  out << "generation,best_log_likelihood\n";
  for (std::size_t g = 0; g < result.history.size(); ++g) {
    out << (g + 1) << ',' << detail::format_full(result.history[g]) << "\n";
  }
  return out.str();
}

inline void write_ga_history_csv(const GaResult& result, const std::string& path) {
  atomic_write(path, ga_history_to_csv(result));
}

namespace detail {

struct HistogramBins {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<std::size_t> counts;
};

inline HistogramBins bin_samples(const std::vector<double>& values, int bins) {
  double lo = values.front();
  double hi = values.front();
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  HistogramBins out;
  out.lower.resize(bins);
  out.upper.resize(bins);
  out.counts.assign(static_cast<std::size_t>(bins), 0);
  const double span = hi - lo;
  for (int b = 0; b < bins; ++b) {
    out.lower(b) = lo + span * b / bins;
    out.upper(b) = lo + span * (b + 1) / bins;
  }
  for (double v : values) {
    int idx = static_cast<int>((v - lo) / span * bins);
    idx = std::clamp(idx, 0, bins - 1);
    ++out.counts[static_cast<std::size_t>(idx)];
  }
  return out;
}

}  // namespace detail

// Posterior histograms of one predicted frequency and one shape coordinate,
// rebuilt from the chain through the forward model. mode_index and
// coordinate_index are zero-based.
inline void emit_histograms(const Chain& chain, const BeamGeometry& geometry,
                            const MeasuredModalData& data, int mode_index, int coordinate_index,
                            int bins, const std::string& path) {
  if (chain.samples.empty()) {
    throw std::invalid_argument("emit_histograms: chain has no samples");
  }
  if (bins < 2) {
    throw std::invalid_argument("emit_histograms: bins must be at least 2");
  }
  if (mode_index < 0 || mode_index >= data.mode_count()) {
    throw std::invalid_argument("emit_histograms: mode_index " + std::to_string(mode_index) +
                                " outside 0.." + std::to_string(data.mode_count() - 1));
  }
  if (coordinate_index < 0 || coordinate_index >= data.coordinate_count()) {
    throw std::invalid_argument("emit_histograms: coordinate_index " +
                                std::to_string(coordinate_index) + " outside 0.." +
                                std::to_string(data.coordinate_count() - 1));
  }

  std::vector<double> freq_samples;
  std::vector<double> coord_samples;
  freq_samples.reserve(chain.samples.size());
  coord_samples.reserve(chain.samples.size());
  std::size_t skipped = 0;
  for (const Eigen::VectorXd& sample : chain.samples) {
    try {
      const ModalPrediction pred =
          predict_modal(UpdatingParameters::from_vector(sample), geometry, data);
      freq_samples.push_back(pred.frequencies_hz(mode_index));
      coord_samples.push_back(pred.shapes(coordinate_index, mode_index));
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  if (freq_samples.empty()) {
    throw std::runtime_error("emit_histograms: every sample failed the forward solve");
  }

  const detail::HistogramBins freq_bins = detail::bin_samples(freq_samples, bins);
  const detail::HistogramBins coord_bins = detail::bin_samples(coord_samples, bins);

  std::ostringstream out;
  out << "# mode_index=" << mode_index << "\n";
  out << "# coordinate_index=" << coordinate_index << "\n";
  out << "# bins=" << bins << "\n";
  out << "# samples=" << freq_samples.size() << "\n";
  out << "# skipped=" << skipped << "\n";
  out << "quantity,bin_lower,bin_upper,count\n";
  for (int b = 0; b < bins; ++b) {
    out << "frequency_hz," << detail::format_number(freq_bins.lower(b)) << ','
        << detail::format_number(freq_bins.upper(b)) << ',' << freq_bins.counts[b] << "\n";
  }
  for (int b = 0; b < bins; ++b) {
    out << "shape_coordinate," << detail::format_number(coord_bins.lower(b)) << ','
        << detail::format_number(coord_bins.upper(b)) << ',' << coord_bins.counts[b] << "\n";
  }
  atomic_write(path, out.str());
}

enum class UpdateMethod { Bayes, MaxLikelihood, Both };

struct UpdateOutputs {
  std::optional<UpdateReport> bayes;
  std::optional<UpdateReport> ml;
  std::optional<Chain> chain;
  std::optional<GaResult> ga;
};

// Full updating pipeline. Bayes runs the Metropolis chain from the prior
// reference and reports posterior-predictive statistics; the maximum
// likelihood baseline runs the GA on the likelihood alone. Artifacts land
// in config.paths.output_dir.
inline UpdateOutputs run_update(const RunConfig& config, const MeasuredModalData& data,
                                UpdateMethod method) {
  config.validate();
  data.validate();
  for (int dof : data.coordinate_map) {
    if (dof >= config.geometry.dof_count()) {
      throw std::invalid_argument("run_update: data coordinate DOF " + std::to_string(dof) +
                                  " outside the model's DOF range");
    }
  }

  const std::string digest = config_digest(config);
  const std::filesystem::path out_dir(config.paths.output_dir);
  const ModalPrediction initial =
      predict_modal(config.prior.reference, config.geometry, data);

  UpdateOutputs outputs;
  if (method == UpdateMethod::Bayes || method == UpdateMethod::Both) {
    const auto objective =
        make_log_posterior_fn(config.geometry, data, config.prior, config.beta);
    Chain chain = run_chain(config.prior.reference, objective, config.chain);
    const PredictiveStats stats = posterior_predictive(chain, config.geometry, data);

    UpdateReport report;
    report.method = "bayes";
    report.seed = config.chain.seed;
    report.config_digest = digest;
    report.skipped = stats.skipped;
    report.measured_hz = data.modal.frequencies_hz;
    report.initial_hz = initial.frequencies_hz;
    report.updated_hz = stats.mean_frequencies_hz;
    report.updated_std_hz = stats.std_frequencies_hz;
    report.initial_mac = initial.mac_diagonal;
    report.updated_mac = stats.mean_mac_diagonal;
    report.updated_std_mac = stats.std_mac_diagonal;

    write_report_csv(report, (out_dir / "report_bayes.csv").string());
    write_chain_csv(chain, config.geometry.element_count, (out_dir / "chain.csv").string());
    outputs.bayes = std::move(report);
    outputs.chain = std::move(chain);
  }

  if (method == UpdateMethod::MaxLikelihood || method == UpdateMethod::Both) {
    const auto objective = make_log_likelihood_fn(config.geometry, data, config.beta);
    const GaResult ga =
        ga_optimize(objective, config.ga, config.prior.reference.to_vector());
    const ModalPrediction best =
        predict_modal(UpdatingParameters::from_vector(ga.best_params), config.geometry, data);

    UpdateReport report;
    report.method = "ml";
    report.seed = config.ga.seed;
    report.config_digest = digest;
    report.skipped = 0;
    report.measured_hz = data.modal.frequencies_hz;
    report.initial_hz = initial.frequencies_hz;
    report.updated_hz = best.frequencies_hz;
    report.initial_mac = initial.mac_diagonal;
    report.updated_mac = best.mac_diagonal;

    write_report_csv(report, (out_dir / "report_ml.csv").string());
    write_ga_history_csv(ga, (out_dir / "ga_history.csv").string());
    outputs.ml = std::move(report);
    outputs.ga = std::move(ga);
  }
  return outputs;
}

}  // namespace modalupd
