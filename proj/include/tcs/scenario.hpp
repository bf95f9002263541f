#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tcs {

/// Raised when a scenario document is malformed or violates a data invariant.
class ScenarioError : public std::runtime_error
{
public:
    explicit ScenarioError(const std::string& msg, int groupId = -1)
    : std::runtime_error(msg)
    , _groupId(groupId)
    {
    }

    /// Offending group id, or -1 when the error is not tied to a group.
    int group_id() const noexcept
    {
        return _groupId;
    }

private:
    int _groupId;
};

/// Invalid behavioral or scheme parameters.
class ParameterError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// One demand cluster: same departure time, trip length and PT time.
struct Group
{
    int id          = 0;
    double gamma    = 0.0; // travelers
    double depart   = 0.0; // s
    double trip_len = 0.0; // m
    double pt_time  = 0.0; // s
};

enum class MfdForm
{
    LinearGreenshields,
    PiecewiseLinear,
    Tabulated,
};

std::string to_string(MfdForm form);
MfdForm mfd_form_from_string(const std::string& tag);

/// Speed-accumulation law V(n) with a strictly positive floor.
///
/// Speeds are m/s and accumulations are vehicle-equivalents. Three shapes are
/// available: Greenshields-linear, piecewise-linear through breakpoints (linear
/// extrapolation past the last one), and a monotone cubic (Fritsch-Carlson)
/// through tabulated samples, held constant past the last sample.
class MfdCurve
{
public:
    MfdCurve() = default;

    static MfdCurve greenshields(double vFree, double nJam, double vFloor);
    static MfdCurve piecewise_linear(std::vector<std::pair<double, double>> breakpoints, double vFloor);
    static MfdCurve tabulated(std::vector<std::pair<double, double>> samples, double vFloor);
    /// Flat curve, handy for tests: a single breakpoint.
    static MfdCurve constant(double v);

    MfdForm form() const noexcept { return _form; }
    double v_floor() const noexcept { return _vFloor; }
    double v_free() const noexcept { return _vFree; }
    double n_jam() const noexcept { return _nJam; }
    const std::vector<std::pair<double, double>>& points() const noexcept { return _points; }

    /// max(raw(n), v_floor); throws std::domain_error for n < 0.
    double speed(double n) const;
    /// Derivative of speed(); exactly 0 where the floor is active.
    double dspeed(double n) const;

    bool operator==(const MfdCurve&) const = default;

private:
    double raw_speed(double n) const;
    double raw_dspeed(double n) const;
    void compute_slopes();

    MfdForm _form  = MfdForm::LinearGreenshields;
    double _vFloor = 1.0;
    double _vFree  = 15.0;
    double _nJam   = 10000.0;
    std::vector<std::pair<double, double>> _points;
    std::vector<double> _slopes; // tangents at tabulated samples
};

double mfd_speed(const MfdCurve& curve, double n);
double mfd_dspeed(const MfdCurve& curve, double n);

struct Scenario
{
    std::vector<Group> groups;
    MfdCurve mfd;
    std::map<std::string, std::string> meta;

    std::size_t size() const noexcept { return groups.size(); }
    double total_travelers() const;
    double min_depart() const;
    double max_depart() const;
};

/// Checks every Scenario and Group invariant, throwing ScenarioError.
void validate(const Scenario& scenario);

enum class EpsSchedule
{
    InverseIteration,
    Constant,
};

enum class CapConstraint
{
    GammaWeighted,
    AsPrinted,
};

enum class SchemeMode
{
    TradableCredits,
    /// Cap and market clearing dropped; the price is a fixed parameter.
    CongestionPricing,
};

std::string to_string(CapConstraint c);
std::string to_string(SchemeMode m);
std::string to_string(EpsSchedule s);

/// Behavioral and scheme parameters, SI units internally (alpha in EUR/s).
struct TcsParams
{
    double alpha          = 10.8 / 3600.0; // EUR/s
    double theta          = 1.0;            // 1/EUR
    double kappa          = 100.0;          // credits per traveler
    double tau            = 200.0;          // credits per car trip
    double eta            = 1.0;
    double j_goal         = 1e-3;
    int max_iters         = 50;
    EpsSchedule eps_schedule = EpsSchedule::InverseIteration;
    double eps_constant   = 0.1;
    double p0             = 0.01; // EUR/credit
    double gamma_emission = 50.0;
    double p_carbon       = 20.0; // EUR/tonne
    CapConstraint cap     = CapConstraint::GammaWeighted;
    SchemeMode mode       = SchemeMode::TradableCredits;

    double alpha_eur_per_h() const noexcept { return alpha * 3600.0; }
    void set_alpha_eur_per_h(double v) noexcept { alpha = v / 3600.0; }

    /// Trust radius for iteration k >= 1.
    double epsilon(int k) const;
};

/// Throws ParameterError on invalid parameters. tau == kappa is accepted (inert scheme).
void validate(const TcsParams& params);

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);
/// Canonical serialization: keys mfd, groups, meta in that order.
std::string serialize_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

} // namespace tcs
