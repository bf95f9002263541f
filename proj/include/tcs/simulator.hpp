#pragma once

#include "tcs/scenario.hpp"

#include <span>
#include <string>
#include <vector>

namespace tcs {

enum class EventKind
{
    Entry,
    Exit,
};

/// One entry or exit, plus the inter-event period that precedes it.
///
/// Period e runs from event e-1 to event e (from t = 0 for the first event).
/// During it the accumulation is `period_accum` and the speed `period_speed`.
/// The set of groups present during period e is exactly the groups with
/// entry_index < e <= exit_index (see SimResult::active_in_period).
struct EventRecord
{
    int index      = 0;
    double time    = 0.0; // t_e, s
    EventKind kind = EventKind::Entry;
    int group      = 0;
    double n_after = 0.0; // accumulation just after the event
    double v_after = 0.0; // V(n_after)
    double dur_prev  = 0.0;   // T_e
    double dist_prev = 0.0;   // l_e = T_e * V_e
    double period_accum = 0.0; // n_{e-1}
    double period_speed = 0.0; // V_e
};

struct SimResult
{
    std::vector<EventRecord> events;
    std::vector<double> car_times; // T_i, s
    std::vector<int> entry_index;
    std::vector<int> exit_index;
    /// Virtual-traveler distance f(t_e) at each event, m.
    std::vector<double> cum_distance;
    /// Smallest gap between two consecutive distinct-time events.
    double min_event_gap = 0.0;
    /// Set when two events are closer than 1e-9 s (order ties are possible).
    bool near_tie = false;

    std::size_t group_count() const noexcept { return car_times.size(); }
    bool active_in_period(int group, int e) const noexcept
    {
        return entry_index[static_cast<std::size_t>(group)] < e && e <= exit_index[static_cast<std::size_t>(group)];
    }
};

class SimulationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Event-driven trip-based MFD simulation for car shares x.
///
/// Every group is simulated, including those with x_i = 0 (they carry zero
/// weight in the accumulation but still trace a trajectory). Simultaneous
/// events are ordered by (time, exits before entries, group id).
SimResult simulate(const Scenario& scenario, std::span<const double> x);

/// Delimited event trace: e, t_e, kind, group, n_after, v_after, T_e, l_e.
std::string event_trace_csv(const SimResult& result);

} // namespace tcs
