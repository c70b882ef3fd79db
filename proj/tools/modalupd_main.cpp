#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>

#include "modalupd/config.hpp"
#include "modalupd/data_io.hpp"
#include "modalupd/report.hpp"

namespace {

using namespace modalupd;

void print_modal_table(const ModalSet& full, const ModalSet& reduced) {
  std::cout << std::setw(6) << "mode" << std::setw(14) << "full_hz" << std::setw(14)
            << "reduced_hz" << "\n";
  for (int i = 0; i < reduced.mode_count(); ++i) {
    std::cout << std::setw(6) << (i + 1) << std::setw(14) << detail::format_number(full.frequencies_hz(i))
              << std::setw(14) << detail::format_number(reduced.frequencies_hz(i)) << "\n";
  }
}

void print_report(const UpdateReport& report) {
  std::cout << "method=" << report.method << "  seed=" << report.seed
            << "  config_digest=" << report.config_digest
            << "  skipped_samples=" << report.skipped << "\n";
  std::cout << std::setw(6) << "mode" << std::setw(13) << "measured_hz" << std::setw(12)
            << "initial_hz" << std::setw(12) << "updated_hz" << std::setw(10) << "std_hz"
            << std::setw(13) << "initial_mac" << std::setw(13) << "updated_mac" << std::setw(10)
            << "std_mac" << "\n";
  for (int i = 0; i < report.mode_count(); ++i) {
    std::cout << std::setw(6) << (i + 1) << std::setw(13)
              << detail::format_number(report.measured_hz(i)) << std::setw(12)
              << detail::format_number(report.initial_hz(i)) << std::setw(12)
              << detail::format_number(report.updated_hz(i)) << std::setw(10)
              << (report.has_spread() ? detail::format_number(report.updated_std_hz(i)) : "-")
              << std::setw(13) << detail::format_number(report.initial_mac(i)) << std::setw(13)
              << detail::format_number(report.updated_mac(i)) << std::setw(10)
              << (report.has_spread() ? detail::format_number(report.updated_std_mac(i)) : "-")
              << "\n";
  }
}

MeasuredModalData resolve_data(const RunConfig& config, const std::string& data_path) {
  if (!data_path.empty()) {
    return load_measured(data_path);
  }
  if (!config.paths.data_file.empty()) {
    return load_measured(config.paths.data_file);
  }
  throw std::runtime_error("no measured data: pass --data or set paths.data_file in the config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-element beam model updating from measured modal data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file; defaults apply when omitted");
  std::uint64_t seed_override = 0;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed_override, "Override the configuration seed (chain uses it, GA uses it + 1)");

  auto* model_cmd = app.add_subcommand("model", "Print the initial model's modal table");
  int model_modes = 5;
  std::string model_out;
  model_cmd->add_option("--modes", model_modes, "Number of elastic modes to list")
      ->check(CLI::PositiveNumber);
  model_cmd->add_option("--out", model_out, "Also write the table to this CSV file");

  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic measured data");
  std::string synth_out = "measured.json";
  int synth_modes = 5;
  double drilled_scale = 0.8;
  double density_scale = 1.0;
  double modulus_scale = 1.0;
  double noise_freq = 0.005;
  double noise_shape = 0.01;
  synth_cmd->add_option("--out", synth_out, "Output JSON file");
  synth_cmd->add_option("--modes", synth_modes, "Number of elastic modes")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--drilled-scale", drilled_scale,
                        "Section scale applied to the drilled elements (5 and 6, 1-based)");
  synth_cmd->add_option("--density-scale", density_scale, "Truth density scale");
  synth_cmd->add_option("--modulus-scale", modulus_scale, "Truth modulus scale");
  synth_cmd->add_option("--noise-freq", noise_freq, "Relative frequency noise sigma");
  synth_cmd->add_option("--noise-shape", noise_shape, "Relative shape noise sigma");

  auto* update_cmd = app.add_subcommand("update", "Run model updating against measured data");
  std::string update_data;
  std::string update_method = "bayes";
  std::string update_out_dir;
  update_cmd->add_option("--data", update_data, "Measured data JSON file");
  update_cmd->add_option("--method", update_method, "bayes, ml or both")
      ->check(CLI::IsMember({"bayes", "ml", "both"}));
  update_cmd->add_option("--out-dir", update_out_dir, "Override the configured output directory");

  auto* report_cmd =
      app.add_subcommand("report", "Rebuild the posterior-predictive report from a stored chain");
  std::string report_data;
  std::string report_chain;
  std::string report_out = "report.csv";
  report_cmd->add_option("--data", report_data, "Measured data JSON file");
  report_cmd->add_option("--chain", report_chain, "Chain CSV produced by update")->required();
  report_cmd->add_option("--out", report_out, "Output CSV file");

  auto* hist_cmd = app.add_subcommand(
      "histogram", "Posterior histograms of one predicted frequency and one shape coordinate");
  std::string hist_data;
  std::string hist_chain;
  std::string hist_out = "histogram.csv";
  int hist_mode = 1;
  int hist_coord = 1;
  int hist_bins = 30;
  hist_cmd->add_option("--data", hist_data, "Measured data JSON file");
  hist_cmd->add_option("--chain", hist_chain, "Chain CSV produced by update")->required();
  hist_cmd->add_option("--mode", hist_mode, "Measured mode number (1-based)")->check(CLI::PositiveNumber);
  hist_cmd->add_option("--coord", hist_coord, "Shape coordinate number (1-based)")
      ->check(CLI::PositiveNumber);
  hist_cmd->add_option("--bins", hist_bins, "Number of histogram bins");
  hist_cmd->add_option("--out", hist_out, "Output CSV file");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = config_path.empty() ? default_config() : load_config(config_path);
    if (seed_opt->count() > 0) {
      config.seed = seed_override;
      config.chain.seed = seed_override;
      config.ga.seed = seed_override + 1;
    }
    config.validate();

    if (model_cmd->parsed()) {
      const FullSystem full = assemble(config.geometry, config.prior.reference);
      const ReducedSystem red = reduce(full, config.masters);
      const ModalSet full_modes = solve_modes(full, model_modes, true);
      const ModalSet red_modes = solve_modes(red, model_modes, true);
      print_modal_table(full_modes, red_modes);
      if (!model_out.empty()) {
        std::ostringstream csv;
        csv << "mode,full_hz,reduced_hz\n";
        for (int i = 0; i < model_modes; ++i) {
          csv << (i + 1) << ',' << detail::format_number(full_modes.frequencies_hz(i)) << ','
              << detail::format_number(red_modes.frequencies_hz(i)) << "\n";
        }
        atomic_write(model_out, csv.str());
        std::cout << "wrote " << model_out << "\n";
      }
    } else if (synth_cmd->parsed()) {
      UpdatingParameters truth = config.prior.reference;
      truth.density_scale = density_scale;
      truth.modulus_scale = modulus_scale;
      for (int e : default_drilled_elements(config.geometry.element_count)) {
        truth.section_scales(e) = drilled_scale;
      }
      const NoiseSpec noise{noise_freq, noise_shape};
      const MeasuredModalData data = synth_measured(truth, config.geometry, config.masters,
                                                    synth_modes, noise, config.seed);
      save_measured(data, synth_out, synth_metadata(truth, noise, config.seed));
      std::cout << "wrote " << synth_out << " (" << data.mode_count() << " modes at "
                << data.coordinate_count() << " coordinates)\n";
    } else if (update_cmd->parsed()) {
      const MeasuredModalData data = resolve_data(config, update_data);
      if (!update_out_dir.empty()) {
        config.paths.output_dir = update_out_dir;
      }
      UpdateMethod method = UpdateMethod::Bayes;
      if (update_method == "ml") method = UpdateMethod::MaxLikelihood;
      if (update_method == "both") method = UpdateMethod::Both;
      const UpdateOutputs outputs = run_update(config, data, method);
      const std::filesystem::path out_dir(config.paths.output_dir);
      if (outputs.bayes.has_value()) {
        print_report(*outputs.bayes);
        std::cout << "acceptance_rate=" << detail::format_number(outputs.chain->acceptance_rate)
                  << "\n";
        std::cout << "wrote " << (out_dir / "report_bayes.csv").string() << ", "
                  << (out_dir / "chain.csv").string() << "\n";
      }
      if (outputs.ml.has_value()) {
        print_report(*outputs.ml);
        std::cout << "best_log_likelihood="
                  << detail::format_number(outputs.ga->best_log_likelihood) << "\n";
        std::cout << "wrote " << (out_dir / "report_ml.csv").string() << ", "
                  << (out_dir / "ga_history.csv").string() << "\n";
      }
    } else if (report_cmd->parsed()) {
      const MeasuredModalData data = resolve_data(config, report_data);
      const Chain chain = read_chain_csv(report_chain);
      const PredictiveStats stats = posterior_predictive(chain, config.geometry, data);
      const ModalPrediction initial = predict_modal(config.prior.reference, config.geometry, data);

      UpdateReport report;
      report.method = "bayes";
      report.seed = chain.seed;
      report.config_digest = config_digest(config);
      report.skipped = stats.skipped;
      report.measured_hz = data.modal.frequencies_hz;
      report.initial_hz = initial.frequencies_hz;
      report.updated_hz = stats.mean_frequencies_hz;
      report.updated_std_hz = stats.std_frequencies_hz;
      report.initial_mac = initial.mac_diagonal;
      report.updated_mac = stats.mean_mac_diagonal;
      report.updated_std_mac = stats.std_mac_diagonal;
      print_report(report);
      write_report_csv(report, report_out);
      std::cout << "wrote " << report_out << "\n";
    } else if (hist_cmd->parsed()) {
      const MeasuredModalData data = resolve_data(config, hist_data);
      const Chain chain = read_chain_csv(hist_chain);
      emit_histograms(chain, config.geometry, data, hist_mode - 1, hist_coord - 1, hist_bins,
                      hist_out);
      std::cout << "wrote " << hist_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
