#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "modalupd/objective.hpp"

namespace modalupd {

struct ChainConfig {
  std::size_t burn_in = 2000;
  std::size_t retained = 1000;
  Eigen::VectorXd step_sizes;
  std::uint64_t seed = 42;
  double target_acceptance = 0.3;
  bool adapt_during_burn_in = true;

  void validate(Eigen::Index parameter_count) const {
    if (retained < 1) {
      throw std::invalid_argument("ChainConfig: retained sample count must be at least 1");
    }
    if (step_sizes.size() != parameter_count) {
      throw std::invalid_argument("ChainConfig: " + std::to_string(step_sizes.size()) +
                                  " step sizes for " + std::to_string(parameter_count) +
                                  " parameters");
    }
    for (int i = 0; i < step_sizes.size(); ++i) {
      if (!(step_sizes(i) > 0.0)) {
        throw std::invalid_argument("ChainConfig: step_sizes[" + std::to_string(i) +
                                    "] must be positive");
      }
    }
    if (!(target_acceptance > 0.1 && target_acceptance < 0.9)) {
      throw std::invalid_argument("ChainConfig: target_acceptance must lie in (0.1, 0.9)");
    }
  }
};

// Retained samples only; burn-in is discarded. A rejected step repeats the
// previous state, so the sample count is always `retained`. Proposals whose
// objective is non-finite (or throws) are rejected outright and tallied in
// invalid_proposals.
struct Chain {
  std::vector<Eigen::VectorXd> samples;
  std::vector<double> log_posteriors;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t invalid_proposals = 0;

  std::size_t size() const { return samples.size(); }
};

enum class ProposalDomain { PositiveScales, Unbounded };

// Independent Gaussian random-walk step per coordinate. In the
// PositiveScales domain a non-positive coordinate is redrawn (the scales are
// physically positive); after 100 tries it is pinned just above zero.
inline Eigen::VectorXd propose(const Eigen::VectorXd& current, const Eigen::VectorXd& step_sizes,
                               std::mt19937_64& rng,
                               ProposalDomain domain = ProposalDomain::PositiveScales) {
  if (current.size() != step_sizes.size()) {
    throw std::invalid_argument("propose: state and step size dimensions differ");
  }
  for (int i = 0; i < step_sizes.size(); ++i) {
    if (!(step_sizes(i) >= 0.0)) {
      throw std::invalid_argument("propose: step sizes must be non-negative");
    }
  }
  std::normal_distribution<double> unit;
  Eigen::VectorXd candidate(current.size());
  for (int i = 0; i < current.size(); ++i) {
    double value = current(i) + step_sizes(i) * unit(rng);
    if (domain == ProposalDomain::PositiveScales && value <= 0.0) {
      for (int tries = 0; value <= 0.0 && tries < 100; ++tries) {
        value = current(i) + step_sizes(i) * unit(rng);
      }
      if (value <= 0.0) {
        value = 1e-6;
      }
    }
    candidate(i) = value;
  }
  return candidate;
}

inline UpdatingParameters propose(const UpdatingParameters& current,
                                  const Eigen::VectorXd& step_sizes, std::mt19937_64& rng) {
  return UpdatingParameters::from_vector(
      propose(current.to_vector(), step_sizes, rng, ProposalDomain::PositiveScales));
}

// Metropolis criterion on log densities. A strictly better candidate is
// taken without drawing; otherwise accept with probability exp(delta).
inline bool accept(double log_p_new, double log_p_old, std::mt19937_64& rng) {
  if (!std::isfinite(log_p_new) || !std::isfinite(log_p_old)) {
    throw std::invalid_argument("accept: log-posterior values must be finite");
  }
  if (log_p_new > log_p_old) {
    return true;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < std::exp(log_p_new - log_p_old);
}

// Random-walk Metropolis with burn-in step adaptation: every 50 burn-in
// steps the step sizes are scaled by 1.05 when the window's acceptance runs
// above target, by 0.95 otherwise. Adaptation stops at the end of burn-in so
// the retained samples come from a fixed kernel.
inline Chain run_chain(const Eigen::VectorXd& initial,
                       const std::function<double(const Eigen::VectorXd&)>& log_posterior_fn,
                       const ChainConfig& config,
                       ProposalDomain domain = ProposalDomain::PositiveScales) {
  config.validate(initial.size());

  double current_lp = log_posterior_fn(initial);
  if (!std::isfinite(current_lp)) {
    throw std::invalid_argument("run_chain: log posterior is not finite at the initial state");
  }

  std::mt19937_64 rng(config.seed);
  Eigen::VectorXd current = initial;
  Eigen::VectorXd steps = config.step_sizes;

  Chain chain;
  chain.seed = config.seed;
  chain.samples.reserve(config.retained);
  chain.log_posteriors.reserve(config.retained);

  constexpr std::size_t adapt_window = 50;
  std::size_t burn_accepts = 0;
  std::size_t window_accepts = 0;
  std::size_t retained_accepts = 0;

  const std::size_t total = config.burn_in + config.retained;
  for (std::size_t t = 0; t < total; ++t) {
    const Eigen::VectorXd candidate = propose(current, steps, rng, domain);
    double candidate_lp = -std::numeric_limits<double>::infinity();
    bool valid = false;
    try {
      candidate_lp = log_posterior_fn(candidate);
      valid = std::isfinite(candidate_lp);
    } catch (const std::exception&) {
      valid = false;
    }

    bool accepted = false;
    if (valid) {
      accepted = accept(candidate_lp, current_lp, rng);
    } else {
      ++chain.invalid_proposals;
    }
    if (accepted) {
      current = candidate;
      current_lp = candidate_lp;
    }

    if (t < config.burn_in) {
      burn_accepts += accepted ? 1 : 0;
      window_accepts += accepted ? 1 : 0;
      if (config.adapt_during_burn_in && (t + 1) % adapt_window == 0) {
        const double rate = static_cast<double>(window_accepts) / adapt_window;
        steps *= (rate > config.target_acceptance) ? 1.05 : 0.95;
        window_accepts = 0;
      }
      if (t + 1 == config.burn_in && burn_accepts == 0) {
        throw std::runtime_error(
            "run_chain: no proposals accepted during burn-in; reduce the step sizes");
      }
    } else {
      retained_accepts += accepted ? 1 : 0;
      chain.samples.push_back(current);
      chain.log_posteriors.push_back(current_lp);
    }
  }

  chain.acceptance_rate =
      static_cast<double>(retained_accepts) / static_cast<double>(config.retained);
  return chain;
}

inline Chain run_chain(const UpdatingParameters& initial,
                       const std::function<double(const Eigen::VectorXd&)>& log_posterior_fn,
                       const ChainConfig& config) {
  return run_chain(initial.to_vector(), log_posterior_fn, config, ProposalDomain::PositiveScales);
}

// Chain pushed through the forward model: per-mode mean and sample standard
// deviation of the predicted frequencies and MAC diagonal. Samples whose
// eigen-solution fails are skipped and counted; more than 1% of them is an
// error.
struct PredictiveStats {
  Eigen::VectorXd mean_frequencies_hz;
  Eigen::VectorXd std_frequencies_hz;
  Eigen::VectorXd mean_mac_diagonal;
  Eigen::VectorXd std_mac_diagonal;
  std::size_t skipped = 0;
};

inline PredictiveStats posterior_predictive(const Chain& chain, const BeamGeometry& geometry,
                                            const MeasuredModalData& data) {
  if (chain.samples.empty()) {
    throw std::invalid_argument("posterior_predictive: chain has no samples");
  }
  const int n = data.mode_count();
  std::vector<Eigen::VectorXd> freqs;
  std::vector<Eigen::VectorXd> macs;
  freqs.reserve(chain.samples.size());
  macs.reserve(chain.samples.size());

  PredictiveStats stats;
  for (const Eigen::VectorXd& sample : chain.samples) {
    try {
      const ModalPrediction pred =
          predict_modal(UpdatingParameters::from_vector(sample), geometry, data);
      freqs.push_back(pred.frequencies_hz);
      macs.push_back(pred.mac_diagonal);
    } catch (const std::exception&) {
      ++stats.skipped;
    }
  }
  if (static_cast<double>(stats.skipped) >
      0.01 * static_cast<double>(chain.samples.size())) {
    throw std::runtime_error("posterior_predictive: " + std::to_string(stats.skipped) + " of " +
                             std::to_string(chain.samples.size()) +
                             " samples failed the forward solve");
  }

  const std::size_t kept = freqs.size();
  stats.mean_frequencies_hz = Eigen::VectorXd::Zero(n);
  stats.std_frequencies_hz = Eigen::VectorXd::Zero(n);
  stats.mean_mac_diagonal = Eigen::VectorXd::Zero(n);
  stats.std_mac_diagonal = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < kept; ++s) {
    stats.mean_frequencies_hz += freqs[s];
    stats.mean_mac_diagonal += macs[s];
  }
  stats.mean_frequencies_hz /= static_cast<double>(kept);
  stats.mean_mac_diagonal /= static_cast<double>(kept);
  if (kept > 1) {
    for (std::size_t s = 0; s < kept; ++s) {
      stats.std_frequencies_hz +=
          (freqs[s] - stats.mean_frequencies_hz).cwiseAbs2();
      stats.std_mac_diagonal += (macs[s] - stats.mean_mac_diagonal).cwiseAbs2();
    }
    stats.std_frequencies_hz =
        (stats.std_frequencies_hz / static_cast<double>(kept - 1)).cwiseSqrt();
    stats.std_mac_diagonal =
        (stats.std_mac_diagonal / static_cast<double>(kept - 1)).cwiseSqrt();
  }
  return stats;
}

}  // namespace modalupd
