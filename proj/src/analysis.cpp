#include "tcs/analysis.hpp"

#include "tcs/gradient.hpp"
#include "tcs/io.hpp"
#include "tcs/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace tcs {

std::vector<std::vector<double>> latin_hypercube(int n, int dim, std::uint64_t seed)
{
    if (n < 1 || dim < 1) {
        throw std::invalid_argument("latin_hypercube: need at least one sample and one dimension");
    }
    Rng rng(seed);
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dim)));
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (int d = 0; d < dim; ++d) {
        for (int k = 0; k < n; ++k) {
            strata[static_cast<std::size_t>(k)] = k;
        }
        rng.shuffle(strata);
        for (int k = 0; k < n; ++k) {
            pts[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] =
                (strata[static_cast<std::size_t>(k)] + rng.uniform()) / n;
        }
    }
    return pts;
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q)
{
    if (s.empty()) {
        return 0.0;
    }
    const double pos  = q * static_cast<double>(s.size() - 1);
    const auto lo     = static_cast<std::size_t>(std::floor(pos));
    const auto hi     = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

template <typename F>
void parallel_for(std::size_t count, int workers, F&& body)
{
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count) {
                return;
            }
            try {
                body(k);
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (pool == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back(work);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace

UniquenessSummary uniqueness_check(const Scenario& scenario, const UniquenessOptions& options)
{
    if (options.n_samples < 2) {
        throw std::invalid_argument("uniqueness_check: need at least two samples");
    }
    const int n     = options.n_samples;
    const auto dim  = static_cast<int>(scenario.size());
    const auto pts  = latin_hypercube(n, dim, options.seed);
    std::vector<std::vector<double>> times(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), options.workers, [&](std::size_t k) {
        times[k] = simulate(scenario, pts[k]).car_times;
    });

    auto dot = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t i = 0; i < scenario.groups.size(); ++i) {
            s += (times[a][i] - times[b][i]) * scenario.groups[i].gamma * (pts[a][i] - pts[b][i]);
        }
        return s;
    };

    UniquenessSummary out;
    const auto total = static_cast<std::int64_t>(n) * (n - 1) / 2;
    if (total <= options.max_pairs) {
        out.all_pairs = true;
        out.dots.reserve(static_cast<std::size_t>(total));
        for (std::size_t a = 0; a < static_cast<std::size_t>(n); ++a) {
            for (std::size_t b = a + 1; b < static_cast<std::size_t>(n); ++b) {
                out.dots.push_back(dot(a, b));
            }
        }
    } else {
        Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
        out.dots.resize(static_cast<std::size_t>(options.max_pairs));
        std::vector<std::pair<std::size_t, std::size_t>> pairs(out.dots.size());
        for (auto& pr : pairs) {
            const auto a = rng.below(static_cast<std::uint64_t>(n));
            auto b       = rng.below(static_cast<std::uint64_t>(n - 1));
            if (b >= a) {
                ++b;
            }
            pr = {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
        }
        parallel_for(pairs.size(), options.workers,
                     [&](std::size_t k) { out.dots[k] = dot(pairs[k].first, pairs[k].second); });
    }
    out.pairs = static_cast<std::int64_t>(out.dots.size());

    std::vector<double> sorted = out.dots;
    std::sort(sorted.begin(), sorted.end());
    out.min = sorted.front();
    out.max = sorted.back();
    out.p01 = quantile_sorted(sorted, 0.01);
    out.p50 = quantile_sorted(sorted, 0.5);
    out.p99 = quantile_sorted(sorted, 0.99);
    out.non_positive = std::count_if(sorted.begin(), sorted.end(), [](double v) { return v <= 0.0; });

    const int bins = std::max(1, options.histogram_bins);
    out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    out.bin_counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = out.max > out.min ? (out.max - out.min) / bins : 1.0;
    for (int b = 0; b <= bins; ++b) {
        out.bin_edges[static_cast<std::size_t>(b)] = out.min + b * width;
    }
    for (double v : sorted) {
        auto b = static_cast<std::size_t>((v - out.min) / width);
        out.bin_counts[std::min(b, static_cast<std::size_t>(bins) - 1)]++;
    }
    return out;
}

std::string histogram_csv(const UniquenessSummary& s)
{
    io::CsvTable t({"bin_lo_s", "bin_hi_s", "count_pairs"});
    for (std::size_t b = 0; b < s.bin_counts.size(); ++b) {
        t.add_row({io::fmt_double(s.bin_edges[b]), io::fmt_double(s.bin_edges[b + 1]), std::to_string(s.bin_counts[b])});
    }
    return t.str();
}

Eigen::MatrixXd stability_jacobian(const Scenario& scenario, const Eigen::MatrixXd& gradPsi, const TcsParams& params)
{
    const auto n = static_cast<Eigen::Index>(scenario.size());
    if (gradPsi.rows() != n || gradPsi.cols() != n + 1) {
        throw std::invalid_argument("stability_jacobian: dimension mismatch");
    }
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g[i] = scenario.groups[static_cast<std::size_t>(i)].gamma;
    }
    Eigen::MatrixXd A(n + 1, n + 1);
    A.topRows(n) = gradPsi;
    A.topLeftCorner(n, n).diagonal().array() -= 1.0;
    A.row(n) = params.tau * (g.transpose() * gradPsi);
    return A;
}

StabilityReport stability_of(const Eigen::MatrixXd& jacobian)
{
    StabilityReport r;
    r.spectrum = eigenvalues(jacobian);
    r.abscissa = r.spectrum.abscissa;
    r.stable   = r.spectrum.converged && r.abscissa < 0.0;
    return r;
}

StabilityReport stability_check(const Scenario& scenario, const TcsParams& params, const ModalState& state)
{
    const auto n   = static_cast<Eigen::Index>(scenario.size());
    const auto sim = simulate(scenario, std::span<const double>(state.x.data(), static_cast<std::size_t>(n)));
    const Eigen::VectorXd times = Eigen::Map<const Eigen::VectorXd>(sim.car_times.data(), n);
    const Eigen::VectorXd psi   = logit_choices(scenario, times, state.p, params);
    const auto grad             = travel_time_gradient(scenario, sim);
    const Eigen::MatrixXd a = stability_jacobian(scenario, logit_gradient(psi, grad.dT, params), params);
    if (state.p > 0.0) {
        return stability_of(a);
    }
    StabilityReport r   = stability_of(a.topLeftCorner(n, n));
    r.price_inactive = true;
    return r;
}

} // namespace tcs
