#include "tcs/emission.hpp"

#include <stdexcept>

namespace tcs {

namespace {

constexpr double kMsToKmh = 3.6;

} // namespace

double emission_per_distance(double v, const EmissionModel& m)
{
    if (!(v > 0.0)) {
        throw std::domain_error("emission_per_distance: speed must be positive");
    }
    const double c02 = m.c0 * m.c0;
    const double a2  = m.c3 + 2.0 * m.c1 * c02;
    const double a1  = m.c4 + m.c2 * c02;
    const double a0  = m.c5 + m.c3 / 3.0 * c02 + m.c1 / 5.0 * c02 * c02;
    return (((m.c1 * v + m.c2) * v + a2) * v + a1) * v + a0;
}

double emission_per_distance_derivative(double v, const EmissionModel& m)
{
    if (!(v > 0.0)) {
        throw std::domain_error("emission_per_distance_derivative: speed must be positive");
    }
    const double c02 = m.c0 * m.c0;
    const double a2  = m.c3 + 2.0 * m.c1 * c02;
    const double a1  = m.c4 + m.c2 * c02;
    return ((4.0 * m.c1 * v + 3.0 * m.c2) * v + 2.0 * a2) * v + a1;
}

double total_emission(const SimResult& sim, const EmissionModel& model)
{
    double grams = 0.0;
    for (const auto& ev : sim.events) {
        if (ev.period_accum <= 0.0 || ev.dur_prev <= 0.0) {
            continue;
        }
        const double km = ev.period_accum * ev.dur_prev * ev.period_speed / 1000.0;
        grams += km * emission_per_distance(ev.period_speed * kMsToKmh, model);
    }
    return grams * 1e-6;
}

double edie_distance(const SimResult& sim)
{
    double d = 0.0;
    for (const auto& ev : sim.events) {
        d += ev.period_accum * ev.dur_prev * ev.period_speed;
    }
    return d;
}

} // namespace tcs
