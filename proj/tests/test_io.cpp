#include "modalupd/report.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "modalupd/config.hpp"
#include "modalupd/data_io.hpp"
#include "modalupd/fsutil.hpp"

namespace {

using namespace modalupd;
namespace fs = std::filesystem;

// Unique scratch directory removed when the test ends.
struct ScratchDir {
  fs::path path;

  explicit ScratchDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("modalupd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) { return read_text_file(path); }

UpdatingParameters drilled_truth(int element_count = 12) {
  UpdatingParameters truth = UpdatingParameters::nominal(element_count);
  truth.section_scales(4) = 0.8;
  truth.section_scales(5) = 0.8;
  return truth;
}

TEST(Config, DefaultsAreValidAndMatchAnEmptyDocument) {
  const RunConfig defaults = default_config();
  EXPECT_NO_THROW(defaults.validate());

  const RunConfig from_empty = config_from_json(nlohmann::json::object());
  EXPECT_EQ(config_to_json(defaults).dump(), config_to_json(from_empty).dump());
}

TEST(Config, JsonRoundTripPreservesEveryField) {
  RunConfig config = default_config();
  config.seed = 314;
  config.beta = 2.5;
  config.geometry.element_count = 8;
  config.geometry.length = 0.8;
  config.prior.groups = default_parameter_groups(8);
  config.prior.alphas = default_alphas(static_cast<int>(config.prior.groups.size()));
  config.prior.alphas(0) = 5.0;
  config.prior.reference = UpdatingParameters::nominal(8);
  config.chain.burn_in = 123;
  config.chain.retained = 77;
  config.chain.seed = 314;
  config.chain.step_sizes = default_step_sizes(config.prior);
  config.chain.adapt_during_burn_in = false;
  config.ga.population_size = 24;
  config.ga.seed = 315;
  config.ga.mutation_sigma = Eigen::VectorXd::Constant(10, 0.03);
  config.ga.lower_bounds = Eigen::VectorXd::Constant(10, 0.4);
  config.ga.upper_bounds = Eigen::VectorXd::Constant(10, 1.8);
  config.masters = translation_dofs(config.geometry);
  config.paths.data_file = "";
  config.paths.output_dir = "elsewhere";

  const nlohmann::json j = config_to_json(config);
  const RunConfig back = config_from_json(j);
  EXPECT_EQ(j.dump(), config_to_json(back).dump());
}

TEST(Config, UnknownKeysAreNamedInTheError) {
  try {
    config_from_json(nlohmann::json{{"geomtry", nlohmann::json::object()}});
    FAIL() << "expected a rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("geomtry"), std::string::npos);
  }

  try {
    config_from_json(nlohmann::json{{"chain", {{"burnin", 10}}}});
    FAIL() << "expected a rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("chain.burnin"), std::string::npos);
  }
}

TEST(Config, ScalarsBroadcastToParameterVectors) {
  const RunConfig config = config_from_json(nlohmann::json{{"chain", {{"step_sizes", 0.03}}}});
  ASSERT_EQ(config.chain.step_sizes.size(), 14);
  EXPECT_EQ(config.chain.step_sizes.minCoeff(), 0.03);
  EXPECT_EQ(config.chain.step_sizes.maxCoeff(), 0.03);

  EXPECT_THROW(config_from_json(nlohmann::json{{"chain", {{"step_sizes", {0.1, 0.2}}}}}),
               std::invalid_argument);
}

TEST(Config, TopLevelSeedDrivesChainAndGaSeeds) {
  const RunConfig config = config_from_json(nlohmann::json{{"seed", 7}});
  EXPECT_EQ(config.seed, 7u);
  EXPECT_EQ(config.chain.seed, 7u);
  EXPECT_EQ(config.ga.seed, 8u);

  const RunConfig split = config_from_json(
      nlohmann::json{{"seed", 7}, {"chain", {{"seed", 100}}}, {"ga", {{"seed", 200}}}});
  EXPECT_EQ(split.chain.seed, 100u);
  EXPECT_EQ(split.ga.seed, 200u);
}

TEST(Config, DefaultStepsAreWiderForTheLoosePriorGroup) {
  const RunConfig config = default_config();
  ASSERT_EQ(config.chain.step_sizes.size(), 14);
  for (Eigen::Index i = 0; i < 14; ++i) {
    EXPECT_DOUBLE_EQ(config.chain.step_sizes(i), (i == 6 || i == 7) ? 0.05 : 0.02) << i;
  }
}

TEST(Config, ValidationRejectsOutOfRangeSettings) {
  RunConfig bad_beta = default_config();
  bad_beta.beta = 0.0;
  EXPECT_THROW(bad_beta.validate(), std::invalid_argument);

  EXPECT_THROW(config_from_json(nlohmann::json{{"geometry", {{"element_count", 1}}}}),
               std::invalid_argument);

  RunConfig bad_masters = default_config();
  bad_masters.masters = {0, 2, 2};
  EXPECT_THROW(bad_masters.validate(), std::invalid_argument);

  RunConfig reference_outside_bounds = default_config();
  reference_outside_bounds.ga.upper_bounds.setConstant(0.9);
  EXPECT_THROW(reference_outside_bounds.validate(), std::invalid_argument);
}

TEST(Config, DigestIsStableHexAndSensitiveToContent) {
  const RunConfig config = default_config();
  const std::string digest = config_digest(config);
  EXPECT_EQ(digest.size(), 16u);
  EXPECT_EQ(digest.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(digest, config_digest(default_config()));

  RunConfig reseeded = default_config();
  reseeded.seed = 43;
  reseeded.chain.seed = 43;
  reseeded.ga.seed = 44;
  EXPECT_NE(digest, config_digest(reseeded));
}

TEST(Config, SaveAndLoadRoundTrip) {
  const ScratchDir dir("config");
  RunConfig config = default_config();
  config.paths.output_dir = dir.file("out");
  save_config(config, dir.file("config.json"));

  const RunConfig loaded = load_config(dir.file("config.json"));
  EXPECT_EQ(config_to_json(config).dump(), config_to_json(loaded).dump());

  EXPECT_THROW(load_config(dir.file("missing.json")), std::runtime_error);

  std::ofstream(dir.file("broken.json")) << "{ not json";
  EXPECT_THROW(load_config(dir.file("broken.json")), std::runtime_error);
}

TEST(MeasuredData, JsonRoundTripIsExact) {
  const RunConfig config = default_config();
  const MeasuredModalData data = synth_measured(drilled_truth(), config.geometry, config.masters,
                                                5, NoiseSpec{0.005, 0.01}, 42);

  const ScratchDir dir("measured");
  save_measured(data, dir.file("measured.json"), synth_metadata(drilled_truth(), NoiseSpec{0.005, 0.01}, 42));
  const MeasuredModalData loaded = load_measured(dir.file("measured.json"));

  EXPECT_EQ((loaded.modal.frequencies_hz - data.modal.frequencies_hz).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((loaded.modal.shapes - data.modal.shapes).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(loaded.coordinate_map, data.coordinate_map);
}

TEST(MeasuredData, ParsesHandWrittenDocumentVerbatim) {
  const nlohmann::json j = {
      {"frequencies_hz", {64.0, 184.0}},
      {"shapes", {{1.0, -0.25}, {0.5, 1.0}, {-1.0, 0.75}}},
      {"coordinate_map", {0, 2, 4}},
  };
  const MeasuredModalData data = measured_from_json(j);

  ASSERT_EQ(data.mode_count(), 2);
  ASSERT_EQ(data.coordinate_count(), 3);
  EXPECT_EQ(data.modal.frequencies_hz(0), 64.0);
  EXPECT_EQ(data.modal.frequencies_hz(1), 184.0);
  EXPECT_EQ(data.modal.shapes(0, 1), -0.25);
  EXPECT_EQ(data.modal.shapes(2, 0), -1.0);
  EXPECT_EQ(data.coordinate_map, (std::vector<int>{0, 2, 4}));
}

TEST(MeasuredData, BundledBeamDatasetLoadsVerbatim) {
  const MeasuredModalData data =
      load_measured(std::string(MODALUPD_SOURCE_DIR) + "/data/beam_measured_frequencies.json");

  ASSERT_EQ(data.mode_count(), 5);
  ASSERT_EQ(data.coordinate_count(), 13);
  const double expected[5] = {64.0, 184.0, 349.0, 599.0, 898.0};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(data.modal.frequencies_hz(i), expected[i]) << "mode " << i + 1;
  }
  EXPECT_EQ(data.coordinate_map, translation_dofs(BeamGeometry{}));

  // The shape columns are nominal-model placeholders, so the initial model
  // correlates with them perfectly.
  const ModalPrediction initial = predict_modal(UpdatingParameters::nominal(12), BeamGeometry{}, data);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(initial.mac_diagonal(i), 1.0, 1e-9) << "mode " << i + 1;
  }
}

TEST(MeasuredData, UnsortedFrequenciesAreCanonicalized) {
  const nlohmann::json j = {
      {"frequencies_hz", {184.0, 64.0}},
      {"shapes", {{-0.25, 1.0}, {1.0, 0.5}}},
      {"coordinate_map", {0, 2}},
  };
  const MeasuredModalData data = measured_from_json(j);

  EXPECT_EQ(data.modal.frequencies_hz(0), 64.0);
  EXPECT_EQ(data.modal.frequencies_hz(1), 184.0);
  // Shape columns follow their frequencies.
  EXPECT_EQ(data.modal.shapes(0, 0), 1.0);
  EXPECT_EQ(data.modal.shapes(0, 1), -0.25);
}

TEST(MeasuredData, RejectsMalformedDocuments) {
  const nlohmann::json good = {
      {"frequencies_hz", {64.0}},
      {"shapes", {{1.0}}},
      {"coordinate_map", {0}},
  };
  EXPECT_NO_THROW(measured_from_json(good));

  nlohmann::json missing = good;
  missing.erase("coordinate_map");
  EXPECT_THROW(measured_from_json(missing), std::invalid_argument);

  nlohmann::json negative = good;
  negative["frequencies_hz"][0] = -3.0;
  EXPECT_THROW(measured_from_json(negative), std::invalid_argument);

  nlohmann::json ragged = {
      {"frequencies_hz", {64.0, 184.0}},
      {"shapes", {{1.0, 2.0}, {0.5}}},
      {"coordinate_map", {0, 2}},
  };
  try {
    measured_from_json(ragged);
    FAIL() << "expected a rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("row"), std::string::npos);
  }

  nlohmann::json duplicate = good;
  duplicate["frequencies_hz"] = {64.0, 184.0};
  duplicate["shapes"] = {{1.0, 2.0}, {0.5, 1.0}};
  duplicate["coordinate_map"] = {2, 2};
  EXPECT_THROW(measured_from_json(duplicate), std::invalid_argument);
}

TEST(Synth, ZeroNoiseReproducesTheTruthModel) {
  const RunConfig config = default_config();
  const UpdatingParameters truth = drilled_truth();
  const MeasuredModalData data =
      synth_measured(truth, config.geometry, config.masters, 5, NoiseSpec{}, 42);

  const ModalSet clean =
      solve_modes(reduce(assemble(config.geometry, truth), config.masters), 5);
  EXPECT_EQ((data.modal.frequencies_hz - clean.frequencies_hz).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((data.modal.shapes - clean.shapes).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Synth, DeterministicPerSeed) {
  const RunConfig config = default_config();
  const NoiseSpec noise{0.005, 0.01};
  const MeasuredModalData a =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, noise, 42);
  const MeasuredModalData b =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, noise, 42);
  const MeasuredModalData c =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, noise, 43);

  EXPECT_EQ((a.modal.frequencies_hz - b.modal.frequencies_hz).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.modal.shapes - b.modal.shapes).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((a.modal.frequencies_hz - c.modal.frequencies_hz).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Synth, NoiseMagnitudesMatchTheRequestedLevels) {
  const RunConfig config = default_config();
  const UpdatingParameters truth = drilled_truth();
  const MeasuredModalData clean =
      synth_measured(truth, config.geometry, config.masters, 5, NoiseSpec{}, 0);
  const NoiseSpec noise{0.005, 0.01};

  double freq_sq = 0.0;
  double shape_sq = 0.0;
  int freq_n = 0;
  int shape_n = 0;
  const int trials = 400;
  for (int seed = 0; seed < trials; ++seed) {
    const MeasuredModalData noisy = synth_measured(truth, config.geometry, config.masters, 5,
                                                   noise, static_cast<std::uint64_t>(seed));
    for (int i = 0; i < 5; ++i) {
      const double rel =
          noisy.modal.frequencies_hz(i) / clean.modal.frequencies_hz(i) - 1.0;
      freq_sq += rel * rel;
      ++freq_n;
      const double rms = clean.modal.shapes.col(i).norm() / std::sqrt(13.0);
      for (int r = 0; r < 13; ++r) {
        const double rel_shape = (noisy.modal.shapes(r, i) - clean.modal.shapes(r, i)) / rms;
        shape_sq += rel_shape * rel_shape;
        ++shape_n;
      }
    }
  }
  EXPECT_NEAR(std::sqrt(freq_sq / freq_n), noise.freq_rel, 0.15 * noise.freq_rel);
  EXPECT_NEAR(std::sqrt(shape_sq / shape_n), noise.shape_rel, 0.15 * noise.shape_rel);
}

TEST(Synth, MetadataRecordsProvenance) {
  const nlohmann::json meta = synth_metadata(drilled_truth(), NoiseSpec{0.005, 0.01}, 42);
  EXPECT_EQ(meta["source"], "synthetic");
  EXPECT_EQ(meta["seed"], 42);
  EXPECT_DOUBLE_EQ(meta["noise"]["freq_rel"].get<double>(), 0.005);
  EXPECT_DOUBLE_EQ(meta["truth"]["section_scales"][4].get<double>(), 0.8);
  EXPECT_DOUBLE_EQ(meta["truth"]["section_scales"][0].get<double>(), 1.0);
}

TEST(FsUtil, AtomicWriteCreatesDirectoriesAndLeavesNoTempFiles) {
  const ScratchDir dir("fsutil");
  const std::string target = dir.file("nested/deeper/out.txt");
  atomic_write(target, "payload\n");

  EXPECT_EQ(slurp(target), "payload\n");
  int entries = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(target).parent_path())) {
    (void)entry;
    ++entries;
  }
  EXPECT_EQ(entries, 1);

  atomic_write(target, "replaced\n");
  EXPECT_EQ(slurp(target), "replaced\n");
}

TEST(FsUtil, Fnv1aMatchesKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(ChainCsv, RoundTripIsBitwiseLossless) {
  const RunConfig config = default_config();
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);
  const auto fn = make_log_posterior_fn(config.geometry, data, config.prior, config.beta);

  ChainConfig small = config.chain;
  small.burn_in = 100;
  small.retained = 50;
  const Chain chain = run_chain(config.prior.reference, fn, small);

  const ScratchDir dir("chain");
  write_chain_csv(chain, 12, dir.file("chain.csv"));
  const Chain loaded = read_chain_csv(dir.file("chain.csv"));

  ASSERT_EQ(loaded.size(), chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    EXPECT_EQ((loaded.samples[i] - chain.samples[i]).cwiseAbs().maxCoeff(), 0.0) << "sample " << i;
    EXPECT_EQ(loaded.log_posteriors[i], chain.log_posteriors[i]);
  }
  EXPECT_EQ(loaded.seed, chain.seed);
  EXPECT_EQ(loaded.acceptance_rate, chain.acceptance_rate);
  EXPECT_EQ(loaded.invalid_proposals, chain.invalid_proposals);
}

TEST(ChainCsv, ReaderRejectsCorruptRows) {
  const ScratchDir dir("chaincorrupt");
  std::ofstream(dir.file("bad.csv"))
      << "# seed=1\n# acceptance_rate=0.5\n# invalid_proposals=0\n"
      << "density_scale,modulus_scale,section_scale_1,log_posterior\n"
      << "1.0,1.0,abc,-1.0\n";
  EXPECT_THROW(read_chain_csv(dir.file("bad.csv")), std::runtime_error);
  EXPECT_THROW(read_chain_csv(dir.file("missing.csv")), std::runtime_error);
}

TEST(ReportCsv, FormatsSixSignificantDigitsAndEmptySpreadForPointEstimates) {
  UpdateReport report;
  report.method = "ml";
  report.seed = 43;
  report.config_digest = "0123456789abcdef";
  report.measured_hz = Eigen::Vector2d(68.8276119, 194.0072);
  report.initial_hz = Eigen::Vector2d(70.1355995, 193.3734);
  report.updated_hz = Eigen::Vector2d(68.9, 193.9);
  report.initial_mac = Eigen::Vector2d(0.99856789, 0.9989);
  report.updated_mac = Eigen::Vector2d(0.9999, 0.9998);

  const std::string csv = report_to_csv(report);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "# method=ml");
  std::getline(lines, line);
  EXPECT_EQ(line, "# seed=43");
  std::getline(lines, line);
  EXPECT_EQ(line, "# config_digest=0123456789abcdef");
  std::getline(lines, line);
  EXPECT_EQ(line, "# skipped_samples=0");
  std::getline(lines, line);
  EXPECT_EQ(line,
            "mode,measured_hz,initial_hz,updated_hz,updated_std_hz,initial_mac,updated_mac,"
            "updated_std_mac");
  std::getline(lines, line);
  EXPECT_EQ(line, "1,68.8276,70.1356,68.9,,0.998568,0.9999,");
}

TEST(ReportCsv, IncludesSpreadColumnsForPosteriorEstimates) {
  UpdateReport report;
  report.method = "bayes";
  report.seed = 42;
  report.config_digest = "00000000deadbeef";
  report.measured_hz = Eigen::VectorXd::Constant(1, 68.83);
  report.initial_hz = Eigen::VectorXd::Constant(1, 70.14);
  report.updated_hz = Eigen::VectorXd::Constant(1, 68.9);
  report.updated_std_hz = Eigen::VectorXd::Constant(1, 0.372);
  report.initial_mac = Eigen::VectorXd::Constant(1, 0.9986);
  report.updated_mac = Eigen::VectorXd::Constant(1, 0.9999);
  report.updated_std_mac = Eigen::VectorXd::Constant(1, 0.0001);

  const std::string csv = report_to_csv(report);
  EXPECT_NE(csv.find("1,68.83,70.14,68.9,0.372,0.9986,0.9999,0.0001"), std::string::npos);
}

TEST(GaHistoryCsv, OneRowPerGeneration) {
  GaResult result;
  result.history = {-10.0, -4.5, -4.5};
  const std::string csv = ga_history_to_csv(result);
  EXPECT_EQ(csv,
            "generation,best_log_likelihood\n"
            "1,-10\n"
            "2,-4.5\n"
            "3,-4.5\n");
}

TEST(Histograms, CountsAreConservedAcrossBins) {
  const RunConfig config = default_config();
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);

  Chain chain;
  for (double m : {0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 0.85}) {
    UpdatingParameters p = UpdatingParameters::nominal(12);
    p.modulus_scale = m;
    chain.samples.push_back(p.to_vector());
    chain.log_posteriors.push_back(0.0);
  }

  const ScratchDir dir("hist");
  emit_histograms(chain, config.geometry, data, 0, 3, 4, dir.file("histogram.csv"));

  const std::string text = slurp(dir.file("histogram.csv"));
  EXPECT_NE(text.find("# mode_index=0"), std::string::npos);
  EXPECT_NE(text.find("# samples=7"), std::string::npos);
  EXPECT_NE(text.find("quantity,bin_lower,bin_upper,count"), std::string::npos);

  std::istringstream lines(text);
  std::string line;
  long freq_total = 0;
  long coord_total = 0;
  while (std::getline(lines, line)) {
    const auto last_comma = line.rfind(',');
    if (line.rfind("frequency_hz,", 0) == 0) {
      freq_total += std::stol(line.substr(last_comma + 1));
    } else if (line.rfind("shape_coordinate,", 0) == 0) {
      coord_total += std::stol(line.substr(last_comma + 1));
    }
  }
  EXPECT_EQ(freq_total, 7);
  EXPECT_EQ(coord_total, 7);
}

TEST(Histograms, DegenerateSpreadStillBins) {
  const RunConfig config = default_config();
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);

  Chain chain;
  chain.samples.assign(3, UpdatingParameters::nominal(12).to_vector());
  chain.log_posteriors.assign(3, 0.0);

  const ScratchDir dir("histdegenerate");
  EXPECT_NO_THROW(emit_histograms(chain, config.geometry, data, 2, 0, 5, dir.file("h.csv")));
  const std::string text = slurp(dir.file("h.csv"));
  EXPECT_NE(text.find("# samples=3"), std::string::npos);
}

TEST(Histograms, ValidatesArguments) {
  const RunConfig config = default_config();
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);
  Chain chain;
  chain.samples.assign(2, UpdatingParameters::nominal(12).to_vector());
  chain.log_posteriors.assign(2, 0.0);

  const ScratchDir dir("histbad");
  EXPECT_THROW(emit_histograms(Chain{}, config.geometry, data, 0, 0, 4, dir.file("h.csv")),
               std::invalid_argument);
  EXPECT_THROW(emit_histograms(chain, config.geometry, data, 5, 0, 4, dir.file("h.csv")),
               std::invalid_argument);
  EXPECT_THROW(emit_histograms(chain, config.geometry, data, 0, 13, 4, dir.file("h.csv")),
               std::invalid_argument);
  EXPECT_THROW(emit_histograms(chain, config.geometry, data, 0, 0, 1, dir.file("h.csv")),
               std::invalid_argument);
}

RunConfig small_run_config(const std::string& out_dir) {
  RunConfig config = default_config();
  config.chain.burn_in = 300;
  config.chain.retained = 150;
  config.ga.population_size = 20;
  config.ga.generations = 25;
  config.paths.output_dir = out_dir;
  return config;
}

TEST(RunUpdate, BayesRunWritesReportAndChain) {
  const ScratchDir dir("bayes");
  const RunConfig config = small_run_config(dir.file("out"));
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);

  const UpdateOutputs outputs = run_update(config, data, UpdateMethod::Bayes);

  ASSERT_TRUE(outputs.bayes.has_value());
  ASSERT_TRUE(outputs.chain.has_value());
  EXPECT_FALSE(outputs.ml.has_value());
  EXPECT_EQ(outputs.bayes->mode_count(), 5);
  EXPECT_TRUE(outputs.bayes->has_spread());
  EXPECT_EQ(outputs.chain->size(), 150u);
  EXPECT_TRUE(fs::exists(dir.file("out/report_bayes.csv")));
  EXPECT_TRUE(fs::exists(dir.file("out/chain.csv")));
  EXPECT_FALSE(fs::exists(dir.file("out/report_ml.csv")));

  // The written chain is the returned chain.
  const Chain loaded = read_chain_csv(dir.file("out/chain.csv"));
  EXPECT_EQ(loaded.size(), outputs.chain->size());
  EXPECT_EQ((loaded.samples.back() - outputs.chain->samples.back()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RunUpdate, StrongLikelihoodRecoversTheDrilledSections) {
  const ScratchDir dir("strong");
  RunConfig config = small_run_config(dir.file("out"));
  config.beta = 1e4;
  config.chain.burn_in = 1500;
  config.chain.retained = 500;
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);

  const UpdateOutputs outputs = run_update(config, data, UpdateMethod::Bayes);
  ASSERT_TRUE(outputs.chain.has_value());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(14);
  for (const Eigen::VectorXd& s : outputs.chain->samples) mean += s;
  mean /= static_cast<double>(outputs.chain->size());

  EXPECT_NEAR(mean(6), 0.8, 0.1);
  EXPECT_NEAR(mean(7), 0.8, 0.1);
  EXPECT_NEAR(mean(0), 1.0, 0.1);
  EXPECT_NEAR(mean(1), 1.0, 0.1);

  const UpdateReport& report = *outputs.bayes;
  for (int i = 0; i < 5; ++i) {
    EXPECT_GE(report.updated_mac(i), report.initial_mac(i)) << "mode " << i + 1;
  }
  // The damaged first mode moves decisively toward the measurement.
  EXPECT_LT(std::abs(report.updated_hz(0) - report.measured_hz(0)),
            std::abs(report.initial_hz(0) - report.measured_hz(0)));
}

TEST(RunUpdate, MaxLikelihoodBaselineNeverLosesToTheInitialModel) {
  const ScratchDir dir("ml");
  const RunConfig config = small_run_config(dir.file("out"));
  const MeasuredModalData data = synth_measured(drilled_truth(), config.geometry, config.masters,
                                                5, NoiseSpec{0.005, 0.01}, 42);

  const UpdateOutputs outputs = run_update(config, data, UpdateMethod::MaxLikelihood);

  ASSERT_TRUE(outputs.ml.has_value());
  ASSERT_TRUE(outputs.ga.has_value());
  EXPECT_FALSE(outputs.bayes.has_value());

  const auto likelihood = make_log_likelihood_fn(config.geometry, data, config.beta);
  EXPECT_GE(outputs.ga->best_log_likelihood,
            likelihood(config.prior.reference.to_vector()));
  for (std::size_t i = 1; i < outputs.ga->history.size(); ++i) {
    EXPECT_GE(outputs.ga->history[i], outputs.ga->history[i - 1]);
  }
  EXPECT_TRUE(fs::exists(dir.file("out/report_ml.csv")));
  EXPECT_TRUE(fs::exists(dir.file("out/ga_history.csv")));

  // Point estimates leave the spread columns empty.
  EXPECT_FALSE(outputs.ml->has_spread());
  EXPECT_NE(slurp(dir.file("out/report_ml.csv")).find("# method=ml"), std::string::npos);
}

TEST(RunUpdate, BothMethodsProduceFourArtifacts) {
  const ScratchDir dir("both");
  const RunConfig config = small_run_config(dir.file("out"));
  const MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);

  const UpdateOutputs outputs = run_update(config, data, UpdateMethod::Both);
  EXPECT_TRUE(outputs.bayes.has_value());
  EXPECT_TRUE(outputs.ml.has_value());
  for (const char* name : {"report_bayes.csv", "chain.csv", "report_ml.csv", "ga_history.csv"}) {
    EXPECT_TRUE(fs::exists(dir.path / "out" / name)) << name;
  }
}

TEST(RunUpdate, RerunsAreByteIdentical) {
  const ScratchDir dir("repeat");
  const MeasuredModalData data = synth_measured(drilled_truth(), default_config().geometry,
                                                default_config().masters, 5,
                                                NoiseSpec{0.005, 0.01}, 42);

  RunConfig first = small_run_config(dir.file("a"));
  run_update(first, data, UpdateMethod::Both);
  RunConfig second = small_run_config(dir.file("b"));
  run_update(second, data, UpdateMethod::Both);

  for (const char* name : {"chain.csv", "ga_history.csv"}) {
    EXPECT_EQ(slurp((dir.path / "a" / name).string()), slurp((dir.path / "b" / name).string()))
        << name;
  }
  // The reports embed a digest of the full config, which covers the differing
  // output directories; everything outside that line must match exactly.
  const auto without_digest = [](std::string text) {
    const auto start = text.find("# config_digest");
    text.erase(start, text.find('\n', start) + 1 - start);
    return text;
  };
  for (const char* name : {"report_bayes.csv", "report_ml.csv"}) {
    EXPECT_EQ(without_digest(slurp((dir.path / "a" / name).string())),
              without_digest(slurp((dir.path / "b" / name).string())))
        << name;
  }
}

TEST(RunUpdate, RejectsDataOutsideTheModelRange) {
  const ScratchDir dir("range");
  const RunConfig config = small_run_config(dir.file("out"));
  MeasuredModalData data =
      synth_measured(drilled_truth(), config.geometry, config.masters, 5, NoiseSpec{}, 42);
  data.coordinate_map.back() = 500;
  EXPECT_THROW(run_update(config, data, UpdateMethod::Bayes), std::invalid_argument);
}

}  // namespace
