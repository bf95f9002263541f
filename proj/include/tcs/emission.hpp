#pragma once

#include "tcs/simulator.hpp"

namespace tcs {

/// Speed-dependent CO2 factor for passenger cars; speed in km/h, output g/km.
struct EmissionModel
{
    double c0 = 12.5;
    double c1 = 1.304e-5;
    double c2 = -0.003269;
    double c3 = 0.3103;
    double c4 = -13.52;
    double c5 = 371.4;
};

/// Throws std::domain_error for non-positive speed.
double emission_per_distance(double speedKmh, const EmissionModel& model = {});
/// d/dV of emission_per_distance, g/km per km/h.
double emission_per_distance_derivative(double speedKmh, const EmissionModel& model = {});

/// Car CO2 over all inter-event periods, tonnes.
double total_emission(const SimResult& sim, const EmissionModel& model = {});

/// Vehicle distance over all periods (sum of n T V), m.
double edie_distance(const SimResult& sim);

} // namespace tcs
