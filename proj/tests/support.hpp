#pragma once

#include "tcs/random.hpp"
#include "tcs/scenario.hpp"
#include "tcs/simulator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace tcs::testing {

// Overlapping trips on a Greenshields curve sized so that the floor is rarely hit.
inline Scenario random_scenario(std::uint64_t seed, int n, double jamFactor = 1.0)
{
    Rng rng(seed);
    Scenario s;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        Group g;
        g.id       = i;
        g.gamma    = std::floor(rng.uniform(50.0, 300.0));
        g.depart   = rng.uniform(0.0, 1800.0);
        g.trip_len = rng.uniform(1000.0, 8000.0);
        g.pt_time  = rng.uniform(600.0, 2400.0);
        total += g.gamma;
        s.groups.push_back(g);
    }
    s.mfd = MfdCurve::greenshields(15.0, jamFactor * total, 1.0);
    return s;
}

inline std::vector<double> interior_shares(std::uint64_t seed, int n)
{
    Rng rng(seed * 7919 + 13);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) {
        v = rng.uniform(0.05, 0.95);
    }
    return x;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Event order as (kind, group) pairs; equal signatures mean no reordering.
inline std::vector<std::pair<int, int>> event_signature(const SimResult& r)
{
    std::vector<std::pair<int, int>> s;
    s.reserve(r.events.size());
    for (const auto& e : r.events) {
        s.emplace_back(e.kind == EventKind::Entry ? 0 : 1, e.group);
    }
    return s;
}

} // namespace tcs::testing
