#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace modalupd {

// Real-coded GA: size-2 tournaments, blend crossover with half-range
// extension, per-gene Gaussian mutation, children clipped to the bounds,
// elitism. Used as a maximum-likelihood point estimator next to the sampler.
struct GaConfig {
  int population_size = 50;
  int generations = 300;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  Eigen::VectorXd mutation_sigma;
  Eigen::VectorXd lower_bounds;
  Eigen::VectorXd upper_bounds;
  int elitism_count = 1;
  std::uint64_t seed = 43;

  Eigen::Index dimension() const { return lower_bounds.size(); }

  void validate() const {
    if (population_size < 4) {
      throw std::invalid_argument("GaConfig: population_size must be at least 4");
    }
    if (generations < 1) {
      throw std::invalid_argument("GaConfig: generations must be at least 1");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
      throw std::invalid_argument("GaConfig: crossover_rate must lie in [0, 1]");
    }
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
      throw std::invalid_argument("GaConfig: mutation_rate must lie in [0, 1]");
    }
    if (elitism_count < 1 || elitism_count >= population_size) {
      throw std::invalid_argument("GaConfig: elitism_count must lie in [1, population_size)");
    }
    const Eigen::Index d = lower_bounds.size();
    if (d < 1) {
      throw std::invalid_argument("GaConfig: bounds must cover at least one parameter");
    }
    if (upper_bounds.size() != d || mutation_sigma.size() != d) {
      throw std::invalid_argument("GaConfig: bounds and mutation_sigma dimensions differ");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(lower_bounds(i) < upper_bounds(i))) {
        throw std::invalid_argument("GaConfig: lower_bounds[" + std::to_string(i) +
                                    "] must be below upper_bounds[" + std::to_string(i) + "]");
      }
      if (!(mutation_sigma(i) > 0.0)) {
        throw std::invalid_argument("GaConfig: mutation_sigma[" + std::to_string(i) +
                                    "] must be positive");
      }
    }
  }
};

struct GaResult {
  Eigen::VectorXd best_params;
  double best_log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<double> history;  // best fitness per generation, non-decreasing
};

inline GaResult ga_optimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const GaConfig& config,
                            const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
  config.validate();
  const Eigen::Index d = config.dimension();
  const int pop_size = config.population_size;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> unit;

  const auto clip = [&](Eigen::VectorXd x) {
    for (Eigen::Index i = 0; i < d; ++i) {
      x(i) = std::clamp(x(i), config.lower_bounds(i), config.upper_bounds(i));
    }
    return x;
  };
  const auto evaluate = [&](const Eigen::VectorXd& x) {
    try {
      const double value = objective(x);
      return std::isfinite(value) ? value : neg_inf;
    } catch (const std::exception&) {
      return neg_inf;
    }
  };

  std::vector<Eigen::VectorXd> population(static_cast<std::size_t>(pop_size));
  std::vector<double> fitness(static_cast<std::size_t>(pop_size), neg_inf);
  for (int i = 0; i < pop_size; ++i) {
    Eigen::VectorXd x(d);
    for (Eigen::Index g = 0; g < d; ++g) {
      x(g) = config.lower_bounds(g) +
             unif(rng) * (config.upper_bounds(g) - config.lower_bounds(g));
    }
    population[static_cast<std::size_t>(i)] = x;
  }
  if (warm_start.has_value()) {
    if (warm_start->size() != d) {
      throw std::invalid_argument("ga_optimize: warm start dimension differs from the bounds");
    }
    population[0] = clip(*warm_start);
  }
  for (int i = 0; i < pop_size; ++i) {
    fitness[static_cast<std::size_t>(i)] = evaluate(population[static_cast<std::size_t>(i)]);
  }
  if (*std::max_element(fitness.begin(), fitness.end()) == neg_inf) {
    throw std::runtime_error(
        "ga_optimize: objective is not finite anywhere in the initial population; review the "
        "bounds");
  }

  GaResult result;
  result.history.reserve(static_cast<std::size_t>(config.generations));
  const auto track_best = [&]() {
    for (int i = 0; i < pop_size; ++i) {
      if (fitness[static_cast<std::size_t>(i)] > result.best_log_likelihood) {
        result.best_log_likelihood = fitness[static_cast<std::size_t>(i)];
        result.best_params = population[static_cast<std::size_t>(i)];
      }
    }
  };
  track_best();

  const auto tournament = [&]() {
    std::uniform_int_distribution<int> pick(0, pop_size - 1);
    const int a = pick(rng);
    const int b = pick(rng);
    return (fitness[static_cast<std::size_t>(b)] > fitness[static_cast<std::size_t>(a)]) ? b : a;
  };

  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<int> order(static_cast<std::size_t>(pop_size));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return fitness[static_cast<std::size_t>(a)] > fitness[static_cast<std::size_t>(b)];
    });

    std::vector<Eigen::VectorXd> next;
    std::vector<double> next_fitness;
    next.reserve(static_cast<std::size_t>(pop_size));
    next_fitness.reserve(static_cast<std::size_t>(pop_size));
    for (int e = 0; e < config.elitism_count; ++e) {
      const int idx = order[static_cast<std::size_t>(e)];
      next.push_back(population[static_cast<std::size_t>(idx)]);
      next_fitness.push_back(fitness[static_cast<std::size_t>(idx)]);
    }

    while (static_cast<int>(next.size()) < pop_size) {
      const int p1 = tournament();
      const int p2 = tournament();
      Eigen::VectorXd c1 = population[static_cast<std::size_t>(p1)];
      Eigen::VectorXd c2 = population[static_cast<std::size_t>(p2)];
      if (unif(rng) < config.crossover_rate) {
        for (Eigen::Index g = 0; g < d; ++g) {
          const double lo = std::min(c1(g), c2(g));
          const double hi = std::max(c1(g), c2(g));
          const double span = hi - lo;
          const double a = lo - 0.5 * span;
          const double b = hi + 0.5 * span;
          c1(g) = a + unif(rng) * (b - a);
          c2(g) = a + unif(rng) * (b - a);
        }
      }
      for (Eigen::VectorXd* child : {&c1, &c2}) {
        for (Eigen::Index g = 0; g < d; ++g) {
          if (unif(rng) < config.mutation_rate) {
            (*child)(g) += config.mutation_sigma(g) * unit(rng);
          }
        }
        *child = clip(*child);
      }
      next.push_back(c1);
      next_fitness.push_back(evaluate(c1));
      if (static_cast<int>(next.size()) < pop_size) {
        next.push_back(c2);
        next_fitness.push_back(evaluate(c2));
      }
    }

    population = std::move(next);
    fitness = std::move(next_fitness);
    track_best();
    result.history.push_back(*std::max_element(fitness.begin(), fitness.end()));
  }
  return result;
}

}  // namespace modalupd
