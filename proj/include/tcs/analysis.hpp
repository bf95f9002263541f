#pragma once

#include "tcs/equilibrium.hpp"
#include "tcs/spectrum.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tcs {

struct UniquenessOptions
{
    int n_samples = 200;
    std::uint64_t seed = 1;
    /// Pairs evaluated when all pairs are more than this; otherwise all pairs.
    std::int64_t max_pairs = 1000000;
    int workers = 1;
    int histogram_bins = 50;
};

struct UniquenessSummary
{
    std::int64_t pairs = 0;
    bool all_pairs     = false;
    double min = 0.0;
    double p01 = 0.0;
    double p50 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
    std::int64_t non_positive = 0;
    std::vector<double> bin_edges; // histogram_bins + 1 edges
    std::vector<std::int64_t> bin_counts;
    std::vector<double> dots; // every evaluated (T1 - T2)' diag(gamma) (x1 - x2), s
};

/// Latin-hypercube share samples, one simulation each, then the monotonicity
/// dot product over pairs.
UniquenessSummary uniqueness_check(const Scenario& scenario, const UniquenessOptions& options = {});

/// Latin hypercube in [0,1]^dim: each column hits every one of the n strata once.
std::vector<std::vector<double>> latin_hypercube(int n, int dim, std::uint64_t seed);

std::string histogram_csv(const UniquenessSummary& summary);

/// Linearized day-to-day dynamics around an equilibrium, (N+1) x (N+1).
Eigen::MatrixXd stability_jacobian(const Scenario& scenario, const Eigen::MatrixXd& gradPsi, const TcsParams& params);

struct StabilityReport
{
    Spectrum spectrum;
    double abscissa = 0.0;
    bool stable     = false;
    /// p = 0: the price sits on its lower bound and only the share block is used.
    bool price_inactive = false;
};

/// Rebuilds the logit gradient at `state` and checks the spectral abscissa.
/// At p = 0 the price cannot move down, so the N x N share block is checked.
StabilityReport stability_check(const Scenario& scenario, const TcsParams& params, const ModalState& state);
StabilityReport stability_of(const Eigen::MatrixXd& jacobian);

} // namespace tcs
