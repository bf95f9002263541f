#pragma once

#include "tcs/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tcs {

/// Knobs for the synthetic demand generator.
///
/// Origin-destination classes each get a base trip length and a PT speed.
/// "Boundary" classes ride PT at a fixed slow speed; inner classes draw theirs
/// from a band, so PT competitiveness depends on the class.
struct GeneratorSpec
{
    int n_groups           = 240;
    double total_travelers = 36000.0;
    double max_per_group   = 250.0;

    double window_s  = 10800.0;
    int n_subperiods = 12;
    /// Relative demand per subperiod; empty means uniform.
    std::vector<double> subperiod_weights;

    int n_od_classes          = 30;
    double trip_len_min_m     = 2000.0;
    double trip_len_max_m     = 14000.0;
    double trip_jitter        = 0.1; // relative spread around the class length
    double boundary_fraction  = 0.3;
    double boundary_pt_speed  = 3.0; // m/s
    double inner_pt_speed_min = 3.5;
    double inner_pt_speed_max = 7.0;

    MfdCurve mfd = MfdCurve::greenshields(15.0, 6000.0, 1.0);
};

/// Named presets: "small" (congested, a few hundred groups) and "lyon-scale".
GeneratorSpec preset_spec(const std::string& name);
std::vector<std::string> preset_names();

/// Pure function of (seed, spec).
Scenario generate_synthetic(std::uint64_t seed, const GeneratorSpec& spec);

/// Splits `total` into `n` integer counts, each <= cap, proportional to weights.
std::vector<double> allocate_counts(double total, double cap, const std::vector<double>& weights);

} // namespace tcs
