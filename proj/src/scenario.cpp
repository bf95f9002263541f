#include "tcs/scenario.hpp"

#include "tcs/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace tcs {

using ojson = nlohmann::ordered_json;

std::string to_string(MfdForm form)
{
    switch (form) {
    case MfdForm::LinearGreenshields: return "linear-greenshields";
    case MfdForm::PiecewiseLinear: return "piecewise-linear";
    case MfdForm::Tabulated: return "tabulated";
    }
    return "unknown";
}

MfdForm mfd_form_from_string(const std::string& tag)
{
    if (tag == "linear-greenshields") {
        return MfdForm::LinearGreenshields;
    }
    if (tag == "piecewise-linear") {
        return MfdForm::PiecewiseLinear;
    }
    if (tag == "tabulated") {
        return MfdForm::Tabulated;
    }
    throw ScenarioError("unknown mfd form: " + tag);
}

std::string to_string(CapConstraint c)
{
    return c == CapConstraint::GammaWeighted ? "gamma-weighted" : "printed";
}

std::string to_string(SchemeMode m)
{
    return m == SchemeMode::TradableCredits ? "tradable-credits" : "congestion-pricing";
}

std::string to_string(EpsSchedule s)
{
    return s == EpsSchedule::InverseIteration ? "inv" : "const";
}

namespace {

void check_points(const std::vector<std::pair<double, double>>& pts)
{
    if (pts.empty()) {
        throw ScenarioError("mfd: at least one breakpoint required");
    }
    if (pts.front().first != 0.0) {
        throw ScenarioError("mfd: first breakpoint must be at n = 0");
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (!std::isfinite(pts[k].first) || !std::isfinite(pts[k].second) || pts[k].second <= 0.0) {
            throw ScenarioError("mfd: breakpoint speeds must be finite and positive");
        }
        if (k > 0) {
            if (pts[k].first <= pts[k - 1].first) {
                throw ScenarioError("mfd: breakpoint accumulations must be strictly increasing");
            }
            if (pts[k].second > pts[k - 1].second) {
                throw ScenarioError("mfd: speed must be non-increasing in accumulation");
            }
        }
    }
}

void check_floor(double vFloor)
{
    if (!(vFloor > 0.0) || !std::isfinite(vFloor)) {
        throw ScenarioError("mfd: v_floor must be positive");
    }
}

} // namespace

MfdCurve MfdCurve::greenshields(double vFree, double nJam, double vFloor)
{
    check_floor(vFloor);
    if (!(vFree > 0.0) || !(nJam > 0.0) || !std::isfinite(vFree) || !std::isfinite(nJam)) {
        throw ScenarioError("mfd: greenshields needs v_free > 0 and n_jam > 0");
    }
    MfdCurve c;
    c._form   = MfdForm::LinearGreenshields;
    c._vFree  = vFree;
    c._nJam   = nJam;
    c._vFloor = vFloor;
    return c;
}

MfdCurve MfdCurve::piecewise_linear(std::vector<std::pair<double, double>> breakpoints, double vFloor)
{
    check_floor(vFloor);
    check_points(breakpoints);
    MfdCurve c;
    c._form   = MfdForm::PiecewiseLinear;
    c._vFloor = vFloor;
    c._vFree  = breakpoints.front().second;
    c._nJam   = 0.0;
    c._points = std::move(breakpoints);
    return c;
}

MfdCurve MfdCurve::tabulated(std::vector<std::pair<double, double>> samples, double vFloor)
{
    check_floor(vFloor);
    check_points(samples);
    MfdCurve c;
    c._form   = MfdForm::Tabulated;
    c._vFloor = vFloor;
    c._vFree  = samples.front().second;
    c._nJam   = 0.0;
    c._points = std::move(samples);
    c.compute_slopes();
    return c;
}

MfdCurve MfdCurve::constant(double v)
{
    return piecewise_linear({{0.0, v}}, v);
}

void MfdCurve::compute_slopes()
{
    // Fritsch-Carlson tangents: monotone piecewise cubic Hermite.
    const auto k = _points.size();
    _slopes.assign(k, 0.0);
    if (k < 2) {
        return;
    }
    std::vector<double> h(k - 1), d(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        h[i] = _points[i + 1].first - _points[i].first;
        d[i] = (_points[i + 1].second - _points[i].second) / h[i];
    }
    _slopes.front() = d.front();
    _slopes.back()  = d.back();
    for (std::size_t i = 1; i + 1 < k; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            _slopes[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            _slopes[i]      = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
}

double MfdCurve::raw_speed(double n) const
{
    switch (_form) {
    case MfdForm::LinearGreenshields:
        return _vFree * (1.0 - n / _nJam);
    case MfdForm::PiecewiseLinear: {
        if (_points.size() == 1) {
            return _points.front().second;
        }
        auto it = std::upper_bound(_points.begin(), _points.end(), n,
                                   [](double v, const auto& p) { return v < p.first; });
        std::size_t seg = it == _points.begin() ? 0 : static_cast<std::size_t>(it - _points.begin()) - 1;
        seg             = std::min(seg, _points.size() - 2);
        const auto& a   = _points[seg];
        const auto& b   = _points[seg + 1];
        return a.second + (b.second - a.second) * (n - a.first) / (b.first - a.first);
    }
    case MfdForm::Tabulated: {
        if (_points.size() == 1 || n >= _points.back().first) {
            return _points.back().second;
        }
        auto it = std::upper_bound(_points.begin(), _points.end(), n,
                                   [](double v, const auto& p) { return v < p.first; });
        const std::size_t seg = static_cast<std::size_t>(it - _points.begin()) - 1;
        const double h        = _points[seg + 1].first - _points[seg].first;
        const double t        = (n - _points[seg].first) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * _points[seg].second + (t3 - 2 * t2 + t) * h * _slopes[seg] +
               (-2 * t3 + 3 * t2) * _points[seg + 1].second + (t3 - t2) * h * _slopes[seg + 1];
    }
    }
    return _vFloor;
}

double MfdCurve::raw_dspeed(double n) const
{
    switch (_form) {
    case MfdForm::LinearGreenshields:
        return -_vFree / _nJam;
    case MfdForm::PiecewiseLinear: {
        if (_points.size() == 1) {
            return 0.0;
        }
        auto it = std::upper_bound(_points.begin(), _points.end(), n,
                                   [](double v, const auto& p) { return v < p.first; });
        std::size_t seg = it == _points.begin() ? 0 : static_cast<std::size_t>(it - _points.begin()) - 1;
        seg             = std::min(seg, _points.size() - 2);
        const auto& a   = _points[seg];
        const auto& b   = _points[seg + 1];
        return (b.second - a.second) / (b.first - a.first);
    }
    case MfdForm::Tabulated: {
        if (_points.size() == 1 || n >= _points.back().first) {
            return 0.0;
        }
        auto it = std::upper_bound(_points.begin(), _points.end(), n,
                                   [](double v, const auto& p) { return v < p.first; });
        const std::size_t seg = static_cast<std::size_t>(it - _points.begin()) - 1;
        const double h        = _points[seg + 1].first - _points[seg].first;
        const double t        = (n - _points[seg].first) / h;
        const double t2       = t * t;
        const double dv = (6 * t2 - 6 * t) * _points[seg].second + (3 * t2 - 4 * t + 1) * h * _slopes[seg] +
                          (-6 * t2 + 6 * t) * _points[seg + 1].second + (3 * t2 - 2 * t) * h * _slopes[seg + 1];
        return dv / h;
    }
    }
    return 0.0;
}

double MfdCurve::speed(double n) const
{
    if (n < 0.0 || std::isnan(n)) {
        throw std::domain_error("mfd: accumulation must be non-negative");
    }
    return std::max(raw_speed(n), _vFloor);
}

double MfdCurve::dspeed(double n) const
{
    if (n < 0.0 || std::isnan(n)) {
        throw std::domain_error("mfd: accumulation must be non-negative");
    }
    return raw_speed(n) > _vFloor ? raw_dspeed(n) : 0.0;
}

double mfd_speed(const MfdCurve& curve, double n)
{
    return curve.speed(n);
}

double mfd_dspeed(const MfdCurve& curve, double n)
{
    return curve.dspeed(n);
}

double Scenario::total_travelers() const
{
    return std::accumulate(groups.begin(), groups.end(), 0.0,
                           [](double acc, const Group& g) { return acc + g.gamma; });
}

double Scenario::min_depart() const
{
    double m = groups.empty() ? 0.0 : groups.front().depart;
    for (const auto& g : groups) {
        m = std::min(m, g.depart);
    }
    return m;
}

double Scenario::max_depart() const
{
    double m = 0.0;
    for (const auto& g : groups) {
        m = std::max(m, g.depart);
    }
    return m;
}

void validate(const Scenario& scenario)
{
    if (scenario.groups.empty()) {
        throw ScenarioError("scenario has no groups");
    }
    for (std::size_t i = 0; i < scenario.groups.size(); ++i) {
        const auto& g = scenario.groups[i];
        if (g.id != static_cast<int>(i)) {
            throw ScenarioError("group ids must be contiguous 0..N-1 (found id " + std::to_string(g.id) +
                                    " at position " + std::to_string(i) + ")",
                                g.id);
        }
        auto bad = [&](const char* what) {
            throw ScenarioError(std::string("group ") + std::to_string(g.id) + ": " + what, g.id);
        };
        if (!std::isfinite(g.gamma) || g.gamma <= 0.0) {
            bad("gamma must be positive");
        }
        if (!std::isfinite(g.trip_len) || g.trip_len <= 0.0) {
            bad("trip_len must be positive");
        }
        if (!std::isfinite(g.pt_time) || g.pt_time <= 0.0) {
            bad("pt_time must be positive");
        }
        if (!std::isfinite(g.depart) || g.depart < 0.0) {
            bad("depart must be non-negative");
        }
    }
    if (auto it = scenario.meta.find("total_travelers"); it != scenario.meta.end()) {
        const double declared = std::stod(it->second);
        const double actual   = scenario.total_travelers();
        if (std::abs(declared - actual) > 1e-9 * std::max(1.0, declared)) {
            throw ScenarioError("declared total_travelers " + it->second + " does not match group sum " +
                                io::fmt_double(actual));
        }
    }
}

double TcsParams::epsilon(int k) const
{
    if (k < 1) {
        throw ParameterError("iteration index starts at 1");
    }
    return eps_schedule == EpsSchedule::InverseIteration ? 1.0 / static_cast<double>(k) : eps_constant;
}

void validate(const TcsParams& p)
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(p.alpha)) {
        throw ParameterError("alpha must be positive");
    }
    if (!positive(p.theta)) {
        throw ParameterError("theta must be positive");
    }
    if (!positive(p.j_goal)) {
        throw ParameterError("j_goal must be positive");
    }
    if (!(std::isfinite(p.eta) && p.eta >= 0.0)) {
        throw ParameterError("eta must be non-negative");
    }
    if (!(std::isfinite(p.kappa) && p.kappa >= 0.0)) {
        throw ParameterError("kappa must be non-negative");
    }
    if (!(std::isfinite(p.tau) && p.tau > 0.0)) {
        throw ParameterError("tau must be positive");
    }
    if (p.tau < p.kappa) {
        throw ParameterError("credit charge tau must not be below the allocation kappa");
    }
    if (!(std::isfinite(p.p0) && p.p0 >= 0.0)) {
        throw ParameterError("p0 must be non-negative");
    }
    if (p.max_iters < 1) {
        throw ParameterError("max_iters must be at least 1");
    }
    if (p.eps_schedule == EpsSchedule::Constant && !positive(p.eps_constant)) {
        throw ParameterError("constant trust radius must be positive");
    }
}

namespace {

template <typename T>
T require(const ojson& obj, const char* key, const std::string& where, int gid = -1)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw ScenarioError(where + ": missing field '" + key + "'", gid);
    }
    try {
        const auto& v = obj.at(key);
        if constexpr (std::is_arithmetic_v<T>) {
            if (!v.is_number()) {
                throw ScenarioError(where + ": field '" + key + "' must be a number", gid);
            }
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ScenarioError(where + ": field '" + key + "' has the wrong type", gid);
    }
}

std::vector<std::pair<double, double>> read_points(const ojson& mfd, const char* key)
{
    if (!mfd.contains(key) || !mfd.at(key).is_array()) {
        throw ScenarioError(std::string("mfd: missing array '") + key + "'");
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : mfd.at(key)) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ScenarioError(std::string("mfd: '") + key + "' entries must be [n, v] pairs");
        }
        pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return pts;
}

} // namespace

Scenario parse_scenario(const std::string& text)
{
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(std::string("scenario parse error: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ScenarioError("scenario document must be an object");
    }
    Scenario s;
    if (!doc.contains("mfd")) {
        throw ScenarioError("scenario: missing field 'mfd'");
    }
    const auto& mfd  = doc.at("mfd");
    const auto form  = mfd_form_from_string(require<std::string>(mfd, "form", "mfd"));
    const auto floor = require<double>(mfd, "v_floor", "mfd");
    switch (form) {
    case MfdForm::LinearGreenshields:
        s.mfd = MfdCurve::greenshields(require<double>(mfd, "v_free", "mfd"), require<double>(mfd, "n_jam", "mfd"), floor);
        break;
    case MfdForm::PiecewiseLinear:
        s.mfd = MfdCurve::piecewise_linear(read_points(mfd, "breakpoints"), floor);
        break;
    case MfdForm::Tabulated:
        s.mfd = MfdCurve::tabulated(read_points(mfd, "samples"), floor);
        break;
    }

    if (!doc.contains("groups") || !doc.at("groups").is_array()) {
        throw ScenarioError("scenario: missing array 'groups'");
    }
    for (const auto& g : doc.at("groups")) {
        const int gid = g.is_object() && g.contains("id") && g.at("id").is_number_integer() ? g.at("id").get<int>() : -1;
        const std::string where = "group " + std::to_string(gid);
        if (gid < 0) {
            throw ScenarioError("group entry without a non-negative integer 'id'");
        }
        Group grp;
        grp.id       = gid;
        grp.gamma    = require<double>(g, "gamma", where, gid);
        grp.depart   = require<double>(g, "depart_s", where, gid);
        grp.trip_len = require<double>(g, "trip_len_m", where, gid);
        grp.pt_time  = require<double>(g, "pt_time_s", where, gid);
        s.groups.push_back(grp);
    }
    if (doc.contains("meta")) {
        const auto& meta = doc.at("meta");
        if (!meta.is_object()) {
            throw ScenarioError("scenario: 'meta' must be an object");
        }
        for (const auto& [k, v] : meta.items()) {
            s.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const std::runtime_error& e) {
        throw ScenarioError(e.what());
    }
    return parse_scenario(text);
}

std::string serialize_scenario(const Scenario& s)
{
    ojson doc;
    ojson mfd;
    mfd["form"] = to_string(s.mfd.form());
    switch (s.mfd.form()) {
    case MfdForm::LinearGreenshields:
        mfd["v_free"] = s.mfd.v_free();
        mfd["n_jam"]  = s.mfd.n_jam();
        break;
    case MfdForm::PiecewiseLinear:
    case MfdForm::Tabulated: {
        ojson pts = ojson::array();
        for (const auto& [n, v] : s.mfd.points()) {
            pts.push_back({n, v});
        }
        mfd[s.mfd.form() == MfdForm::Tabulated ? "samples" : "breakpoints"] = pts;
        break;
    }
    }
    mfd["v_floor"] = s.mfd.v_floor();
    doc["mfd"]     = mfd;

    ojson groups = ojson::array();
    for (const auto& g : s.groups) {
        ojson o;
        o["id"]         = g.id;
        o["gamma"]      = g.gamma;
        o["depart_s"]   = g.depart;
        o["trip_len_m"] = g.trip_len;
        o["pt_time_s"]  = g.pt_time;
        groups.push_back(o);
    }
    doc["groups"] = groups;
    ojson meta    = ojson::object();
    for (const auto& [k, v] : s.meta) {
        meta[k] = v;
    }
    doc["meta"] = meta;
    return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path)
{
    io::write_atomic(path, serialize_scenario(scenario));
}

} // namespace tcs
