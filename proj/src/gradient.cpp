#include "tcs/gradient.hpp"

#include "tcs/io.hpp"

#include <stdexcept>

namespace tcs {

Eigen::VectorXd grad_speed(int e, const Scenario& scenario, const SimResult& sim)
{
    const auto n = static_cast<Eigen::Index>(scenario.groups.size());
    if (e < 0 || static_cast<std::size_t>(e) >= sim.events.size()) {
        throw std::out_of_range("grad_speed: event index out of range");
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    const double slope = scenario.mfd.dspeed(sim.events[static_cast<std::size_t>(e)].period_accum);
    if (slope == 0.0) {
        return g;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sim.active_in_period(static_cast<int>(i), e)) {
            g[i] = scenario.groups[static_cast<std::size_t>(i)].gamma * slope;
        }
    }
    return g;
}

InterEventGradient::InterEventGradient(const Scenario& scenario, const SimResult& sim)
: _sim(sim)
{
    const auto n = static_cast<Eigen::Index>(scenario.groups.size());
    if (sim.group_count() != scenario.groups.size() || sim.events.size() != 2 * scenario.groups.size()) {
        throw std::invalid_argument("gradient: simulation does not match the scenario");
    }
    _period            = Eigen::VectorXd::Zero(n);
    _timeGrad          = Eigen::VectorXd::Zero(n);
    _lengthGrad        = Eigen::VectorXd::Zero(n);
    _lengthGradAtEntry = Eigen::MatrixXd::Zero(n, n);
}

const Eigen::VectorXd& InterEventGradient::advance(int e, const Eigen::VectorXd& gradSpeed)
{
    if (e != _next) {
        throw std::logic_error("gradient: events must be processed in ascending order (expected " +
                               std::to_string(_next) + ", got " + std::to_string(e) + ")");
    }
    const auto& ev   = _sim.events[static_cast<std::size_t>(e)];
    const double dur = ev.dur_prev;
    const double v   = ev.period_speed;

    if (ev.kind == EventKind::Entry) {
        const bool afterExit = e > 0 && _sim.events[static_cast<std::size_t>(e) - 1].kind == EventKind::Exit;
        if (afterExit) {
            _period = -_timeGrad;
        } else {
            _period.setZero();
        }
    } else {
        const Eigen::VectorXd sinceEntry = _lengthGrad - _lengthGradAtEntry.col(ev.group);
        _period                = -(dur * gradSpeed + sinceEntry) / v;
    }

    _timeGrad += _period;
    _lengthGrad += v * _period + dur * gradSpeed;
    if (ev.kind == EventKind::Entry) {
        _lengthGradAtEntry.col(ev.group) = _lengthGrad;
    }
    ++_next;
    return _period;
}

GradientMatrix travel_time_gradient(const Scenario& scenario, const SimResult& sim, GradientOptions options)
{
    const auto n      = static_cast<Eigen::Index>(scenario.groups.size());
    const auto events = static_cast<int>(sim.events.size());
    InterEventGradient rec(scenario, sim);

    GradientMatrix out;
    out.dT       = Eigen::MatrixXd::Zero(n, n);
    out.near_tie = sim.near_tie;
    if (options.keep_event_buffers) {
        out.event_grad_speed  = Eigen::MatrixXd::Zero(events, n);
        out.event_grad_period = Eigen::MatrixXd::Zero(events, n);
        out.event_grad_time   = Eigen::MatrixXd::Zero(events, n);
    }

    for (int e = 0; e < events; ++e) {
        const auto gv  = grad_speed(e, scenario, sim);
        const auto& gp = rec.advance(e, gv);
        const auto& ev = sim.events[static_cast<std::size_t>(e)];
        if (ev.kind == EventKind::Exit) {
            // grad t vanishes at every entry, so the summed period gradients
            // over the trip equal grad t at the exit.
            out.dT.row(ev.group) = rec.event_time_gradient().transpose();
        }
        if (options.keep_event_buffers) {
            out.event_grad_speed.row(e)  = gv.transpose();
            out.event_grad_period.row(e) = gp.transpose();
            out.event_grad_time.row(e)   = rec.event_time_gradient().transpose();
        }
    }
    return out;
}

std::string gradient_csv(const GradientMatrix& grad)
{
    const auto n = grad.dT.rows();
    std::vector<std::string> header{"group"};
    for (Eigen::Index j = 0; j < grad.dT.cols(); ++j) {
        header.push_back("dT_dx" + std::to_string(j) + "_s");
    }
    io::CsvTable table(header);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::string> row{std::to_string(i)};
        for (Eigen::Index j = 0; j < grad.dT.cols(); ++j) {
            row.push_back(io::fmt_double(grad.dT(i, j)));
        }
        table.add_row(std::move(row));
    }
    return table.str();
}

} // namespace tcs
