#include "tcs/synthetic.hpp"

#include "tcs/io.hpp"
#include "tcs/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tcs {

std::vector<std::string> preset_names()
{
    return {"small", "lyon-scale"};
}

GeneratorSpec preset_spec(const std::string& name)
{
    GeneratorSpec spec;
    if (name == "small") {
        spec.boundary_pt_speed  = 3.5;
        spec.inner_pt_speed_min = 4.0;
        spec.inner_pt_speed_max = 8.0;
        spec.subperiod_weights  = {0.6, 0.8, 1.0, 1.2, 1.3, 1.3, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7};
        spec.mfd                = MfdCurve::greenshields(15.0, 5000.0, 1.0);
        return spec;
    }
    if (name == "lyon-scale") {
        spec.n_groups          = 2163;
        spec.total_travelers   = 384200.0;
        spec.max_per_group     = 250.0;
        spec.n_od_classes      = 224;
        spec.trip_len_min_m    = 2000.0;
        spec.trip_len_max_m    = 20000.0;
        spec.subperiod_weights = {0.6, 0.8, 1.0, 1.2, 1.3, 1.3, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7};
        spec.mfd               = MfdCurve::greenshields(15.0, 64000.0, 1.0);
        return spec;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

std::vector<double> allocate_counts(double total, double cap, const std::vector<double>& weights)
{
    const std::size_t n = weights.size();
    if (n == 0 || total < 0.0 || !(cap > 0.0) || std::floor(total) != total) {
        throw std::invalid_argument("allocate_counts: invalid arguments");
    }
    if (static_cast<double>(n) * std::floor(cap) < total) {
        throw std::invalid_argument("allocate_counts: total exceeds n * cap");
    }
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> counts(n), frac(n);
    double assigned = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ideal = total * weights[i] / wsum;
        counts[i]          = std::min(std::floor(cap), std::floor(ideal));
        frac[i]            = ideal - std::floor(ideal);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    double remaining = total - assigned;
    while (remaining > 0.0) {
        bool progressed = false;
        for (auto i : order) {
            if (remaining <= 0.0) {
                break;
            }
            if (counts[i] + 1.0 <= std::floor(cap)) {
                counts[i] += 1.0;
                remaining -= 1.0;
                progressed = true;
            }
        }
        if (!progressed) {
            throw std::logic_error("allocate_counts: could not place remainder");
        }
    }
    return counts;
}

Scenario generate_synthetic(std::uint64_t seed, const GeneratorSpec& spec)
{
    if (spec.n_groups < 1 || spec.n_od_classes < 1 || spec.n_subperiods < 1) {
        throw std::invalid_argument("generator: counts must be positive");
    }
    if (!(spec.window_s > 0.0)) {
        throw std::invalid_argument("generator: empty departure window");
    }
    if (!(spec.trip_len_min_m > 0.0) || spec.trip_len_max_m < spec.trip_len_min_m) {
        throw std::invalid_argument("generator: empty trip-length range");
    }
    if (!(spec.inner_pt_speed_min > 0.0) || spec.inner_pt_speed_max < spec.inner_pt_speed_min ||
        !(spec.boundary_pt_speed > 0.0)) {
        throw std::invalid_argument("generator: empty PT speed band");
    }
    if (!spec.subperiod_weights.empty() && spec.subperiod_weights.size() != static_cast<std::size_t>(spec.n_subperiods)) {
        throw std::invalid_argument("generator: one weight per subperiod required");
    }
    if (spec.trip_jitter < 0.0 || spec.trip_jitter >= 1.0) {
        throw std::invalid_argument("generator: trip_jitter must lie in [0, 1)");
    }

    Rng rng(seed);

    struct OdClass
    {
        double length;
        double pt_speed;
        bool boundary;
    };
    std::vector<OdClass> classes(static_cast<std::size_t>(spec.n_od_classes));
    for (auto& c : classes) {
        c.length   = rng.uniform(spec.trip_len_min_m, spec.trip_len_max_m);
        c.boundary = rng.uniform() < spec.boundary_fraction;
        c.pt_speed = c.boundary ? spec.boundary_pt_speed : rng.uniform(spec.inner_pt_speed_min, spec.inner_pt_speed_max);
    }

    std::vector<double> cumw(static_cast<std::size_t>(spec.n_subperiods));
    for (int k = 0; k < spec.n_subperiods; ++k) {
        const double w = spec.subperiod_weights.empty() ? 1.0 : spec.subperiod_weights[static_cast<std::size_t>(k)];
        cumw[static_cast<std::size_t>(k)] = (k ? cumw[static_cast<std::size_t>(k) - 1] : 0.0) + w;
    }
    const double subLen = spec.window_s / spec.n_subperiods;

    std::vector<Group> groups(static_cast<std::size_t>(spec.n_groups));
    std::vector<double> weights(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& c   = classes[i % classes.size()];
        const double u  = rng.uniform() * cumw.back();
        const auto sub  = static_cast<std::size_t>(std::upper_bound(cumw.begin(), cumw.end(), u) - cumw.begin());
        auto& g         = groups[i];
        g.depart        = (static_cast<double>(std::min(sub, cumw.size() - 1)) + rng.uniform()) * subLen;
        g.trip_len      = c.length * (1.0 + spec.trip_jitter * (2.0 * rng.uniform() - 1.0));
        g.pt_time       = g.trip_len / c.pt_speed;
        weights[i]      = 0.5 + rng.uniform();
    }
    const auto counts = allocate_counts(spec.total_travelers, spec.max_per_group, weights);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        groups[i].gamma = counts[i];
    }
    // Groups left without travelers are dropped.
    std::erase_if(groups, [](const Group& g) { return g.gamma <= 0.0; });
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.depart < b.depart; });
    for (std::size_t i = 0; i < groups.size(); ++i) {
        groups[i].id = static_cast<int>(i);
    }

    Scenario s;
    s.groups                  = std::move(groups);
    s.mfd                     = spec.mfd;
    s.meta["generator"]       = "synthetic";
    s.meta["seed"]            = std::to_string(seed);
    s.meta["od_classes"]      = std::to_string(spec.n_od_classes);
    s.meta["total_travelers"] = io::fmt_double(spec.total_travelers);
    validate(s);
    return s;
}

} // namespace tcs
