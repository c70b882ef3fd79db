#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/beam.hpp"
#include "modalupd/fsutil.hpp"
#include "modalupd/genetic.hpp"
#include "modalupd/metropolis.hpp"
#include "modalupd/objective.hpp"

namespace modalupd {

struct RunPaths {
  std::string data_file;  // optional default dataset for the CLI
  std::string output_dir = "out";
};

// Everything a run needs, loadable from one JSON file. Every key is
// optional; omitted values fall back to the reference beam setup (1 m
// free-free aluminium beam, 12 elements, four prior groups).
struct RunConfig {
  std::uint64_t seed = 42;
  double beta = 1.0;
  BeamGeometry geometry;
  PriorSpec prior;
  ChainConfig chain;
  GaConfig ga;
  std::vector<int> masters;
  RunPaths paths;

  int parameter_count() const { return geometry.element_count + 2; }

  void validate() const {
    geometry.validate();
    if (geometry.element_count < 2) {
      throw std::invalid_argument("config: geometry.element_count must be at least 2");
    }
    if (!(beta > 0.0)) {
      throw std::invalid_argument("config: beta must be positive");
    }
    prior.validate();
    if (prior.reference.element_count() != geometry.element_count) {
      throw std::invalid_argument("config: prior reference covers " +
                                  std::to_string(prior.reference.element_count()) +
                                  " elements, geometry has " +
                                  std::to_string(geometry.element_count));
    }
    chain.validate(parameter_count());
    ga.validate();
    if (ga.dimension() != parameter_count()) {
      throw std::invalid_argument("config: ga bounds cover " + std::to_string(ga.dimension()) +
                                  " parameters, model has " + std::to_string(parameter_count()));
    }
    const Eigen::VectorXd reference = prior.reference.to_vector();
    for (Eigen::Index i = 0; i < reference.size(); ++i) {
      if (reference(i) < ga.lower_bounds(i) || reference(i) > ga.upper_bounds(i)) {
        throw std::invalid_argument("config: ga bounds must contain the prior reference point");
      }
    }
    if (masters.empty()) {
      throw std::invalid_argument("config: masters must not be empty");
    }
    std::vector<bool> seen(static_cast<std::size_t>(geometry.dof_count()), false);
    for (int dof : masters) {
      if (dof < 0 || dof >= geometry.dof_count()) {
        throw std::invalid_argument("config: master DOF " + std::to_string(dof) +
                                    " outside range 0.." +
                                    std::to_string(geometry.dof_count() - 1));
      }
      if (seen[static_cast<std::size_t>(dof)]) {
        throw std::invalid_argument("config: duplicate master DOF " + std::to_string(dof));
      }
      seen[static_cast<std::size_t>(dof)] = true;
    }
    if (paths.output_dir.empty()) {
      throw std::invalid_argument("config: paths.output_dir must not be empty");
    }
  }
};

// Parameters default to 0.02 steps; members of loosely held groups
// (alpha < 1) move in 0.05 steps.
inline Eigen::VectorXd default_step_sizes(const PriorSpec& prior) {
  Eigen::VectorXd steps =
      Eigen::VectorXd::Constant(prior.reference.parameter_count(), 0.02);
  for (int q = 0; q < prior.group_count(); ++q) {
    if (prior.alphas(q) < 1.0) {
      for (int idx : prior.groups[static_cast<std::size_t>(q)]) {
        steps(idx) = 0.05;
      }
    }
  }
  return steps;
}

inline RunConfig default_config() {
  RunConfig config;
  config.prior.groups = default_parameter_groups(config.geometry.element_count);
  config.prior.alphas = default_alphas(static_cast<int>(config.prior.groups.size()));
  config.prior.reference = UpdatingParameters::nominal(config.geometry.element_count);
  config.chain.step_sizes = default_step_sizes(config.prior);
  config.chain.seed = config.seed;
  const int n = config.parameter_count();
  config.ga.mutation_sigma = Eigen::VectorXd::Constant(n, 0.05);
  config.ga.lower_bounds = Eigen::VectorXd::Constant(n, 0.5);
  config.ga.upper_bounds = Eigen::VectorXd::Constant(n, 1.5);
  config.ga.seed = config.seed + 1;
  config.masters = translation_dofs(config.geometry);
  return config;
}

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& scope,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument("config: unknown key '" +
                                  (scope.empty() ? item.key() : scope + "." + item.key()) + "'");
    }
  }
}

inline double as_number(const nlohmann::json& value, const std::string& name) {
  if (!value.is_number()) {
    throw std::invalid_argument("config: " + name + " must be a number");
  }
  return value.get<double>();
}

inline int as_int(const nlohmann::json& value, const std::string& name) {
  if (!value.is_number_integer()) {
    throw std::invalid_argument("config: " + name + " must be an integer");
  }
  return value.get<int>();
}

inline std::uint64_t as_seed(const nlohmann::json& value, const std::string& name) {
  if (!value.is_number_unsigned() && !value.is_number_integer()) {
    throw std::invalid_argument("config: " + name + " must be a non-negative integer");
  }
  if (value.is_number_integer() && value.get<long long>() < 0) {
    throw std::invalid_argument("config: " + name + " must be a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

// Scalar broadcast or explicit per-entry array.
inline Eigen::VectorXd as_vector(const nlohmann::json& value, Eigen::Index size,
                                 const std::string& name) {
  Eigen::VectorXd out(size);
  if (value.is_number()) {
    out.setConstant(value.get<double>());
    return out;
  }
  if (!value.is_array()) {
    throw std::invalid_argument("config: " + name + " must be a number or an array");
  }
  if (static_cast<Eigen::Index>(value.size()) != size) {
    throw std::invalid_argument("config: " + name + " has " + std::to_string(value.size()) +
                                " entries, expected " + std::to_string(size));
  }
  for (Eigen::Index i = 0; i < size; ++i) {
    out(i) = as_number(value[static_cast<std::size_t>(i)],
                       name + "[" + std::to_string(i) + "]");
  }
  return out;
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: top level must be a JSON object");
  }
  detail::check_keys(j, "",
                     {"seed", "beta", "geometry", "prior", "chain", "ga", "masters", "paths"});

  RunConfig config;
  if (j.contains("seed")) config.seed = detail::as_seed(j["seed"], "seed");
  if (j.contains("beta")) config.beta = detail::as_number(j["beta"], "beta");

  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    detail::check_keys(g, "geometry",
                       {"length_m", "width_m", "thickness_m", "element_count",
                        "nominal_modulus_pa", "nominal_density_kg_m3"});
    if (g.contains("length_m")) config.geometry.length = detail::as_number(g["length_m"], "geometry.length_m");
    if (g.contains("width_m")) config.geometry.width = detail::as_number(g["width_m"], "geometry.width_m");
    if (g.contains("thickness_m")) {
      config.geometry.thickness = detail::as_number(g["thickness_m"], "geometry.thickness_m");
    }
    if (g.contains("element_count")) {
      config.geometry.element_count = detail::as_int(g["element_count"], "geometry.element_count");
    }
    if (g.contains("nominal_modulus_pa")) {
      config.geometry.nominal_modulus =
          detail::as_number(g["nominal_modulus_pa"], "geometry.nominal_modulus_pa");
    }
    if (g.contains("nominal_density_kg_m3")) {
      config.geometry.nominal_density =
          detail::as_number(g["nominal_density_kg_m3"], "geometry.nominal_density_kg_m3");
    }
  }
  if (config.geometry.element_count < 1) {
    throw std::invalid_argument("config: geometry.element_count must be positive");
  }
  const int n_params = config.parameter_count();

  config.prior.groups = default_parameter_groups(config.geometry.element_count);
  config.prior.alphas = default_alphas(static_cast<int>(config.prior.groups.size()));
  config.prior.reference = UpdatingParameters::nominal(config.geometry.element_count);
  if (j.contains("prior")) {
    const auto& p = j["prior"];
    detail::check_keys(p, "prior", {"alphas", "groups", "reference"});
    if (p.contains("groups")) {
      if (!p["groups"].is_array()) {
        throw std::invalid_argument("config: prior.groups must be an array of index arrays");
      }
      config.prior.groups.clear();
      for (std::size_t q = 0; q < p["groups"].size(); ++q) {
        const auto& group = p["groups"][q];
        if (!group.is_array()) {
          throw std::invalid_argument("config: prior.groups[" + std::to_string(q) +
                                      "] must be an array of parameter indices");
        }
        std::vector<int> indices;
        for (std::size_t k = 0; k < group.size(); ++k) {
          indices.push_back(detail::as_int(group[k], "prior.groups[" + std::to_string(q) + "][" +
                                                         std::to_string(k) + "]"));
        }
        config.prior.groups.push_back(std::move(indices));
      }
      config.prior.alphas = Eigen::VectorXd::Constant(
          static_cast<Eigen::Index>(config.prior.groups.size()), 10.0);
    }
    if (p.contains("alphas")) {
      config.prior.alphas =
          detail::as_vector(p["alphas"], static_cast<Eigen::Index>(config.prior.groups.size()),
                            "prior.alphas");
    }
    if (p.contains("reference")) {
      const auto& r = p["reference"];
      detail::check_keys(r, "prior.reference",
                         {"density_scale", "modulus_scale", "section_scales"});
      if (r.contains("density_scale")) {
        config.prior.reference.density_scale =
            detail::as_number(r["density_scale"], "prior.reference.density_scale");
      }
      if (r.contains("modulus_scale")) {
        config.prior.reference.modulus_scale =
            detail::as_number(r["modulus_scale"], "prior.reference.modulus_scale");
      }
      if (r.contains("section_scales")) {
        config.prior.reference.section_scales =
            detail::as_vector(r["section_scales"], config.geometry.element_count,
                              "prior.reference.section_scales");
      }
    }
  }

  config.chain.step_sizes = default_step_sizes(config.prior);
  config.chain.seed = config.seed;
  if (j.contains("chain")) {
    const auto& c = j["chain"];
    detail::check_keys(c, "chain",
                       {"burn_in", "retained", "step_sizes", "seed", "target_acceptance",
                        "adapt_during_burn_in"});
    if (c.contains("burn_in")) {
      const int value = detail::as_int(c["burn_in"], "chain.burn_in");
      if (value < 0) throw std::invalid_argument("config: chain.burn_in must be non-negative");
      config.chain.burn_in = static_cast<std::size_t>(value);
    }
    if (c.contains("retained")) {
      const int value = detail::as_int(c["retained"], "chain.retained");
      if (value < 1) throw std::invalid_argument("config: chain.retained must be at least 1");
      config.chain.retained = static_cast<std::size_t>(value);
    }
    if (c.contains("step_sizes")) {
      config.chain.step_sizes = detail::as_vector(c["step_sizes"], n_params, "chain.step_sizes");
    }
    if (c.contains("seed")) config.chain.seed = detail::as_seed(c["seed"], "chain.seed");
    if (c.contains("target_acceptance")) {
      config.chain.target_acceptance =
          detail::as_number(c["target_acceptance"], "chain.target_acceptance");
    }
    if (c.contains("adapt_during_burn_in")) {
      if (!c["adapt_during_burn_in"].is_boolean()) {
        throw std::invalid_argument("config: chain.adapt_during_burn_in must be a boolean");
      }
      config.chain.adapt_during_burn_in = c["adapt_during_burn_in"].get<bool>();
    }
  }

  config.ga.mutation_sigma = Eigen::VectorXd::Constant(n_params, 0.05);
  config.ga.lower_bounds = Eigen::VectorXd::Constant(n_params, 0.5);
  config.ga.upper_bounds = Eigen::VectorXd::Constant(n_params, 1.5);
  config.ga.seed = config.seed + 1;
  if (j.contains("ga")) {
    const auto& g = j["ga"];
    detail::check_keys(g, "ga",
                       {"population_size", "generations", "crossover_rate", "mutation_rate",
                        "mutation_sigma", "bounds", "elitism_count", "seed"});
    if (g.contains("population_size")) {
      config.ga.population_size = detail::as_int(g["population_size"], "ga.population_size");
    }
    if (g.contains("generations")) {
      config.ga.generations = detail::as_int(g["generations"], "ga.generations");
    }
    if (g.contains("crossover_rate")) {
      config.ga.crossover_rate = detail::as_number(g["crossover_rate"], "ga.crossover_rate");
    }
    if (g.contains("mutation_rate")) {
      config.ga.mutation_rate = detail::as_number(g["mutation_rate"], "ga.mutation_rate");
    }
    if (g.contains("mutation_sigma")) {
      config.ga.mutation_sigma =
          detail::as_vector(g["mutation_sigma"], n_params, "ga.mutation_sigma");
    }
    if (g.contains("bounds")) {
      const auto& b = g["bounds"];
      detail::check_keys(b, "ga.bounds", {"low", "high"});
      if (b.contains("low")) {
        config.ga.lower_bounds = detail::as_vector(b["low"], n_params, "ga.bounds.low");
      }
      if (b.contains("high")) {
        config.ga.upper_bounds = detail::as_vector(b["high"], n_params, "ga.bounds.high");
      }
    }
    if (g.contains("elitism_count")) {
      config.ga.elitism_count = detail::as_int(g["elitism_count"], "ga.elitism_count");
    }
    if (g.contains("seed")) config.ga.seed = detail::as_seed(g["seed"], "ga.seed");
  }

  config.masters = translation_dofs(config.geometry);
  if (j.contains("masters")) {
    if (!j["masters"].is_array()) {
      throw std::invalid_argument("config: masters must be an array of DOF indices");
    }
    config.masters.clear();
    for (std::size_t k = 0; k < j["masters"].size(); ++k) {
      config.masters.push_back(
          detail::as_int(j["masters"][k], "masters[" + std::to_string(k) + "]"));
    }
  }

  if (j.contains("paths")) {
    const auto& p = j["paths"];
    detail::check_keys(p, "paths", {"data_file", "output_dir"});
    if (p.contains("data_file")) {
      if (!p["data_file"].is_string()) {
        throw std::invalid_argument("config: paths.data_file must be a string");
      }
      config.paths.data_file = p["data_file"].get<std::string>();
    }
    if (p.contains("output_dir")) {
      if (!p["output_dir"].is_string()) {
        throw std::invalid_argument("config: paths.output_dir must be a string");
      }
      config.paths.output_dir = p["output_dir"].get<std::string>();
    }
  }

  config.validate();
  return config;
}

inline nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["beta"] = config.beta;
  j["geometry"] = {{"length_m", config.geometry.length},
                   {"width_m", config.geometry.width},
                   {"thickness_m", config.geometry.thickness},
                   {"element_count", config.geometry.element_count},
                   {"nominal_modulus_pa", config.geometry.nominal_modulus},
                   {"nominal_density_kg_m3", config.geometry.nominal_density}};
  nlohmann::json alphas = nlohmann::json::array();
  for (int q = 0; q < config.prior.group_count(); ++q) {
    alphas.push_back(config.prior.alphas(q));
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& group : config.prior.groups) {
    groups.push_back(group);
  }
  nlohmann::json sections = nlohmann::json::array();
  for (int e = 0; e < config.prior.reference.element_count(); ++e) {
    sections.push_back(config.prior.reference.section_scales(e));
  }
  j["prior"] = {{"alphas", alphas},
                {"groups", groups},
                {"reference",
                 {{"density_scale", config.prior.reference.density_scale},
                  {"modulus_scale", config.prior.reference.modulus_scale},
                  {"section_scales", sections}}}};
  nlohmann::json steps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < config.chain.step_sizes.size(); ++i) {
    steps.push_back(config.chain.step_sizes(i));
  }
  j["chain"] = {{"burn_in", config.chain.burn_in},
                {"retained", config.chain.retained},
                {"step_sizes", steps},
                {"seed", config.chain.seed},
                {"target_acceptance", config.chain.target_acceptance},
                {"adapt_during_burn_in", config.chain.adapt_during_burn_in}};
  nlohmann::json sigma = nlohmann::json::array();
  nlohmann::json low = nlohmann::json::array();
  nlohmann::json high = nlohmann::json::array();
  for (Eigen::Index i = 0; i < config.ga.dimension(); ++i) {
    sigma.push_back(config.ga.mutation_sigma(i));
    low.push_back(config.ga.lower_bounds(i));
    high.push_back(config.ga.upper_bounds(i));
  }
  j["ga"] = {{"population_size", config.ga.population_size},
             {"generations", config.ga.generations},
             {"crossover_rate", config.ga.crossover_rate},
             {"mutation_rate", config.ga.mutation_rate},
             {"mutation_sigma", sigma},
             {"bounds", {{"low", low}, {"high", high}}},
             {"elitism_count", config.ga.elitism_count},
             {"seed", config.ga.seed}};
  j["masters"] = config.masters;
  j["paths"] = {{"data_file", config.paths.data_file},
                {"output_dir", config.paths.output_dir}};
  return j;
}

inline RunConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("config file not found: " + path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  RunConfig config = config_from_json(j);
  if (!config.paths.data_file.empty() && !std::filesystem::exists(config.paths.data_file)) {
    throw std::runtime_error("config: referenced data file not found: " + config.paths.data_file);
  }
  return config;
}

inline void save_config(const RunConfig& config, const std::string& path) {
  atomic_write(path, config_to_json(config).dump(2) + "\n");
}

// Short fingerprint of the fully expanded configuration, recorded in every
// output so results can be traced back to their settings.
inline std::string config_digest(const RunConfig& config) {
  const std::uint64_t hash = fnv1a64(config_to_json(config).dump());
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buffer);
}

}  // namespace modalupd
