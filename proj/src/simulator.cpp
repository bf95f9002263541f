#include "tcs/simulator.hpp"

#include "tcs/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace tcs {

namespace {

struct PendingExit
{
    double target; // virtual-traveler distance at which the group leaves
    int group;

    bool operator>(const PendingExit& o) const noexcept
    {
        return target != o.target ? target > o.target : group > o.group;
    }
};

} // namespace

SimResult simulate(const Scenario& scenario, std::span<const double> x)
{
    const std::size_t n = scenario.groups.size();
    if (n == 0) {
        throw SimulationError("simulate: empty scenario");
    }
    if (x.size() != n) {
        throw SimulationError("simulate: share vector has " + std::to_string(x.size()) + " entries, expected " +
                              std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
            throw SimulationError("simulate: share of group " + std::to_string(i) + " outside [0, 1]");
        }
    }

    const auto& groups = scenario.groups;
    const auto& mfd    = scenario.mfd;

    std::vector<int> entryOrder(n);
    std::iota(entryOrder.begin(), entryOrder.end(), 0);
    std::stable_sort(entryOrder.begin(), entryOrder.end(), [&](int a, int b) {
        return groups[static_cast<std::size_t>(a)].depart < groups[static_cast<std::size_t>(b)].depart;
    });

    double maxLen = 0.0;
    for (const auto& g : groups) {
        maxLen = std::max(maxLen, g.trip_len);
    }
    const double horizon = scenario.max_depart() + 10.0 * maxLen / mfd.v_floor();

    SimResult res;
    res.events.reserve(2 * n);
    res.cum_distance.reserve(2 * n);
    res.car_times.assign(n, 0.0);
    res.entry_index.assign(n, -1);
    res.exit_index.assign(n, -1);
    res.min_event_gap = std::numeric_limits<double>::infinity();

    std::priority_queue<PendingExit, std::vector<PendingExit>, std::greater<>> pending;

    double t      = 0.0;
    double f      = 0.0;
    double accum  = 0.0;
    double speed  = mfd.speed(0.0);
    int active    = 0;
    std::size_t nextEntry = 0;

    while (res.events.size() < 2 * n) {
        const double tEntry = nextEntry < n ? groups[static_cast<std::size_t>(entryOrder[nextEntry])].depart
                                            : std::numeric_limits<double>::infinity();
        double tExit = std::numeric_limits<double>::infinity();
        if (!pending.empty()) {
            tExit = t + std::max(0.0, pending.top().target - f) / speed;
        }

        EventRecord ev;
        ev.index        = static_cast<int>(res.events.size());
        ev.period_accum = accum;
        ev.period_speed = speed;

        if (!pending.empty() && tExit <= tEntry) {
            const auto top = pending.top();
            pending.pop();
            ev.kind      = EventKind::Exit;
            ev.group     = top.group;
            ev.dur_prev  = std::max(0.0, top.target - f) / speed;
            ev.dist_prev = ev.dur_prev * speed;
            t += ev.dur_prev;
            f += ev.dist_prev;
            const auto gi = static_cast<std::size_t>(top.group);
            accum -= groups[gi].gamma * x[gi];
            --active;
            res.exit_index[gi] = ev.index;
        } else {
            const int gid = entryOrder[nextEntry++];
            const auto gi = static_cast<std::size_t>(gid);
            ev.kind       = EventKind::Entry;
            ev.group      = gid;
            ev.dur_prev   = tEntry - t;
            ev.dist_prev  = ev.dur_prev * speed;
            t             = tEntry;
            f += ev.dist_prev;
            accum += groups[gi].gamma * x[gi];
            ++active;
            res.entry_index[gi] = ev.index;
            pending.push({f + groups[gi].trip_len, gid});
        }
        if (active == 0 || accum < 0.0) {
            accum = 0.0;
        }
        if (t > horizon) {
            throw SimulationError("simulate: trips did not finish before the horizon (near-gridlock)");
        }
        speed      = mfd.speed(accum);
        ev.time    = t;
        ev.n_after = accum;
        ev.v_after = speed;
        if (ev.index > 0) {
            res.min_event_gap = std::min(res.min_event_gap, ev.dur_prev);
        }
        res.events.push_back(ev);
        res.cum_distance.push_back(f);
    }
    res.near_tie = res.min_event_gap < 1e-9;

    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int e = res.entry_index[i] + 1; e <= res.exit_index[i]; ++e) {
            sum += res.events[static_cast<std::size_t>(e)].dur_prev;
        }
        res.car_times[i] = sum;
    }
    return res;
}

std::string event_trace_csv(const SimResult& result)
{
    io::CsvTable table({"e", "t_e_s", "kind", "group", "n_after_veh", "v_after_m_per_s", "T_e_s", "l_e_m"});
    for (const auto& ev : result.events) {
        table.add_row({std::to_string(ev.index), io::fmt_double(ev.time), ev.kind == EventKind::Entry ? "entry" : "exit",
                       std::to_string(ev.group), io::fmt_double(ev.n_after), io::fmt_double(ev.v_after),
                       io::fmt_double(ev.dur_prev), io::fmt_double(ev.dist_prev)});
    }
    return table.str();
}

} // namespace tcs
