#pragma once

#include "tcs/scenario.hpp"
#include "tcs/simulator.hpp"

#include <Eigen/Dense>

#include <string>

namespace tcs {

/// dT(i, j) = dT_i / dx_j in seconds per unit share.
struct GradientMatrix
{
    Eigen::MatrixXd dT;
    /// Per-event buffers, filled only when requested (2N x N each):
    /// row e holds grad V_e, grad T_e and the running grad t_e.
    Eigen::MatrixXd event_grad_speed;
    Eigen::MatrixXd event_grad_period;
    Eigen::MatrixXd event_grad_time;
    /// Copied from the simulation: the realized event order had near ties, so
    /// the gradient is only one-sided there.
    bool near_tie = false;
};

struct GradientOptions
{
    bool keep_event_buffers = false;
};

/// Speed sensitivity over period e: gamma_i * V'(n_{e-1}) for groups present, else 0.
Eigen::VectorXd grad_speed(int e, const Scenario& scenario, const SimResult& sim);

/// Inter-event period sensitivities, advanced strictly in event order.
///
/// Entry after entry: zero. Entry after exit: minus the accumulated shift of
/// the previous event time. Exit of group i: solved from the constraint that
/// i's trip length does not depend on the shares.
class InterEventGradient
{
public:
    InterEventGradient(const Scenario& scenario, const SimResult& sim);

    /// Computes grad T_e. Throws std::logic_error unless e == next_event().
    const Eigen::VectorXd& advance(int e, const Eigen::VectorXd& gradSpeed);

    int next_event() const noexcept { return _next; }
    /// grad t_e of the last processed event.
    const Eigen::VectorXd& event_time_gradient() const noexcept { return _timeGrad; }

private:
    const SimResult& _sim;
    int _next = 0;
    Eigen::VectorXd _period;   // grad T_e
    Eigen::VectorXd _timeGrad; // running sum of grad T_g
    Eigen::VectorXd _lengthGrad; // running sum of grad T_g V_g + T_g grad V_g
    Eigen::MatrixXd _lengthGradAtEntry; // column i: _lengthGrad right after i entered
};

/// Event recursion over the whole simulation; O(N^2) work.
GradientMatrix travel_time_gradient(const Scenario& scenario, const SimResult& sim, GradientOptions options = {});

/// Dense matrix as delimited text, group ids as headers.
std::string gradient_csv(const GradientMatrix& grad);

} // namespace tcs
