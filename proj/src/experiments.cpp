#include "bmdrift/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "bmdrift/capacity.hpp"
#include "bmdrift/drifts.hpp"
#include "bmdrift/errors.hpp"
#include "bmdrift/fracdim.hpp"
#include "bmdrift/hitting.hpp"
#include "bmdrift/kernels.hpp"
#include "bmdrift/multipoint.hpp"
#include "bmdrift/randpath.hpp"
#include "bmdrift/stats.hpp"

#ifndef BMDRIFT_VERSION
#define BMDRIFT_VERSION "0.0.0"
#endif

namespace bmdrift {

const char* artifact_version() { return BMDRIFT_VERSION; }

// ---- ParamMap

const ParamValue& ParamMap::get(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) throw ValidationError("labcli: missing parameter '" + name + "'");
    return it->second;
}

long long ParamMap::integer(const std::string& name) const { return std::get<long long>(get(name)); }
double ParamMap::real(const std::string& name) const { return std::get<double>(get(name)); }
bool ParamMap::boolean(const std::string& name) const { return std::get<bool>(get(name)); }
const std::string& ParamMap::text(const std::string& name) const { return std::get<std::string>(get(name)); }
const std::vector<double>& ParamMap::real_list(const std::string& name) const {
    return std::get<std::vector<double>>(get(name));
}

json ParamMap::to_json() const {
    json out = json::object();
    for (const auto& [k, v] : values_) std::visit([&](const auto& x) { out[k] = x; }, v);
    return out;
}

namespace {

using PT = ParamType;

std::string type_name(ParamType t) {
    switch (t) {
        case PT::integer: return "integer";
        case PT::real: return "real";
        case PT::boolean: return "boolean";
        case PT::text: return "text";
        case PT::real_list: return "real list";
    }
    return "?";
}

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

ParamValue parse_value(const ParamSpec& p, const std::string& raw) {
    auto fail = [&](const std::string& why) -> ValidationError {
        return ValidationError("labcli: parameter '" + p.name + "': " + why + " (got '" + raw + "')");
    };
    auto range = [&](double v) {
        if (p.min && v < *p.min) throw fail("must be >= " + json(*p.min).dump());
        if (p.max && v > *p.max) throw fail("must be <= " + json(*p.max).dump());
    };
    switch (p.type) {
        case PT::integer: {
            long long v = 0;
            const auto r = std::from_chars(raw.data(), raw.data() + raw.size(), v);
            if (r.ec != std::errc() || r.ptr != raw.data() + raw.size()) throw fail("expected an integer");
            range(static_cast<double>(v));
            return v;
        }
        case PT::real: {
            const auto v = parse_real(raw);
            if (!v) throw fail("expected a finite real");
            range(*v);
            return *v;
        }
        case PT::boolean: {
            if (raw == "true" || raw == "1" || raw == "yes") return true;
            if (raw == "false" || raw == "0" || raw == "no") return false;
            throw fail("expected true or false");
        }
        case PT::text: {
            if (!p.choices.empty() && std::find(p.choices.begin(), p.choices.end(), raw) == p.choices.end()) {
                std::string all;
                for (const auto& c : p.choices) all += (all.empty() ? "" : ", ") + c;
                throw fail("must be one of " + all);
            }
            return raw;
        }
        case PT::real_list: {
            std::vector<double> out;
            std::stringstream ss(raw);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
                const auto v = parse_real(b == std::string::npos ? "" : item.substr(b, e - b + 1));
                if (!v) throw fail("expected comma-separated reals");
                range(*v);
                out.push_back(*v);
            }
            if (out.empty()) throw fail("list is empty");
            return out;
        }
    }
    throw fail("unknown type");
}

// ---- shared parameter blocks

ParamSpec integer(std::string n, std::string def, double lo, double hi, std::string help) {
    return {std::move(n), PT::integer, std::move(def), std::move(help), lo, hi, {}};
}
ParamSpec real(std::string n, std::string def, double lo, double hi, std::string help) {
    return {std::move(n), PT::real, std::move(def), std::move(help), lo, hi, {}};
}
ParamSpec choice(std::string n, std::string def, std::vector<std::string> choices, std::string help) {
    return {std::move(n), PT::text, std::move(def), std::move(help), std::nullopt, std::nullopt, std::move(choices)};
}

std::vector<ParamSpec> drift_block(const std::string& def, std::vector<std::string> kinds) {
    return {choice("drift", def, std::move(kinds), "drift family"),
            real("drift_scale", "1", 0.0, 1e6, "K for sqrt-cusp, slope for linear"),
            real("drift_exponent", "0.5", 0.01, 0.99, "Hoelder exponent (weierstrass) or Hurst index (fbm)"),
            {"drift_file", PT::text, "", "CSV (time, v_1..v_d) for drift = csv", std::nullopt, std::nullopt, {}}};
}

std::vector<ParamSpec> concat(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<double> unit(int d) {
    std::vector<double> e(d, 0.0);
    e[0] = 1.0;
    return e;
}

DriftSpec make_drift(const ParamMap& p, int d, RngStream& rng) {
    const std::string& kind = p.text("drift");
    const double K = p.real("drift_scale");
    const double g = p.real("drift_exponent");
    if (kind == "zero") return DriftSpec::zero(d);
    if (kind == "linear") {
        std::vector<double> v = unit(d);
        v[0] = K;
        return DriftSpec::linear(v);
    }
    if (kind == "sqrt-cusp") return DriftSpec::sqrt_cusp(K, unit(d));
    if (kind == "weierstrass") return DriftSpec::weierstrass(g, 40, rng.next_u64(), unit(d));
    if (kind == "fbm") return DriftSpec::fbm_full(g, rng.next_u64(), d);
    const DriftSpec f = DriftSpec::from_csv(p.text("drift_file"));
    if (f.dim() != d) throw ValidationError("labcli: drift file dimension differs from d");
    return f;
}

std::optional<double> optional_rate(double r) { return r > 0.0 ? std::optional<double>(r) : std::nullopt; }

json hit_json(const HitResult& r) {
    json j;
    j["estimate"] = r.estimate;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["trials"] = r.trials;
    j["hits"] = r.hits;
    j["bias_bound"] = r.bias_bound;
    j["killed"] = r.killed ? json(*r.killed) : json(nullptr);
    j["escape_radius"] = r.escape_radius;
    j["mean_steps"] = r.mean_steps;
    return j;
}

json dim_json(const DimEstimate& e) {
    json j;
    j["value"] = e.value;
    j["stderr"] = e.stderr_;
    j["level_min"] = e.level_min;
    j["level_max"] = e.level_max;
    j["r2"] = e.r2;
    j["method"] = e.method;
    j["points"] = e.points;
    j["warnings"] = e.warnings;
    return j;
}

Table dim_table(const DimEstimate& e) {
    Table t{{"level", "boxes"}, {}};
    for (std::size_t i = 0; i < e.levels.size(); ++i)
        t.rows.push_back({static_cast<double>(e.levels[i]), static_cast<double>(e.counts[i])});
    return t;
}

json scaling_json(const ScalingReport& r) {
    json j;
    j["dim"] = r.dim;
    j["levels"] = r.levels;
    j["median_distance"] = r.median_distance;
    j["exponent"] = r.exponent;
    j["exponent_stderr"] = r.exponent_stderr;
    j["seed_exponents"] = r.seed_exponents;
    j["hit_fraction"] = r.hit_fraction;
    j["gap"] = r.gap;
    return j;
}

Table scaling_table(const ScalingReport& r) {
    Table t{{"level", "median_distance", "hit_fraction"}, {}};
    for (std::size_t i = 0; i < r.levels.size(); ++i)
        t.rows.push_back({static_cast<double>(r.levels[i]), r.median_distance[i], r.hit_fraction[i]});
    return t;
}

PathSample unit_path(RngStream& rng, int levels, int d) { return brownian_sample(rng, TimeGrid(0.0, 1.0, levels), d); }

// ---- experiments

std::vector<Experiment> build_registry() {
    std::vector<Experiment> reg;

    reg.push_back({{"green-free",
                    "free Green kernel closed form c(d) r^{2-d} for d >= 3",
                    "closed form against direct quadrature of the heat kernel",
                    {integer("d", "3", 3, 12, "dimension"), real("r", "1", 1e-6, 1e6, "radius")},
                    {}},
                   [](const ParamMap& p, RngStream&) {
                       const int d = static_cast<int>(p.integer("d"));
                       const double r = p.real("r");
                       const double closed = green_free_radial(d, r);
                       const QuadratureResult q = green_integral(d, 0.0, r);
                       json j;
                       j["closed_form"] = closed;
                       j["quadrature"] = q.value;
                       j["quadrature_error"] = q.error;
                       j["abs_diff"] = std::abs(closed - q.value);
                       return ReplicaOutput{j, {}};
                   }});

    reg.push_back({{"green-sandwich",
                    "Green kernel equivalence c1 G <= G_f <= c2 G for Hoelder(1/2) drift",
                    "ratio of drifted to undrifted Green kernel over log-spaced radii",
                    concat({integer("d", "3", 2, 8, "dimension"), real("rate", "0", 0.0, 1e6, "killing rate, 0 for none"),
                            real("r_min", "0.01", 1e-6, 1e6, "smallest radius"), real("r_max", "100", 1e-6, 1e6, "largest radius"),
                            integer("points", "25", 2, 400, "log-spaced radii"),
                            real("rel_tol", "1e-10", 1e-14, 1e-3, "quadrature relative tolerance")},
                           drift_block("sqrt-cusp", {"zero", "linear", "sqrt-cusp", "weierstrass"})),
                    {{"points", "5"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       QuadratureSettings s;
                       s.rel_tol = p.real("rel_tol");
                       const auto radii = log_spaced(p.real("r_min"), p.real("r_max"), static_cast<int>(p.integer("points")));
                       const SandwichReport rep =
                           verify_green_sandwich(f, d, optional_rate(p.real("rate")), radii, standard_directions(d), s);
                       json j;
                       j["c1"] = rep.c1;
                       j["c2"] = rep.c2;
                       j["drift"] = f.describe();
                       Table t{{"r", "ratio"}, {}};
                       for (const auto& e : rep.entries) t.rows.push_back({e.r, e.ratio});
                       return ReplicaOutput{j, t};
                   }});

    reg.push_back({{"brownian-moment",
                    "Brownian motion: E|B_t|^2 = d t",
                    "Monte Carlo second moment of B_t",
                    {integer("d", "3", 1, 64, "dimension"), integer("samples", "100000", 1, 1e9, "replicas of B_t"),
                     real("t", "1", 1e-9, 1e9, "time")},
                    {{"samples", "1000"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const double t = p.real("t");
                       RunningStats st;
                       for (long long i = 0; i < p.integer("samples"); ++i) {
                           const PathSample b = brownian_sample(rng, TimeGrid(0.0, t, 0), d);
                           double s = 0.0;
                           for (int k = 0; k < d; ++k) s += b.at(1, k) * b.at(1, k);
                           st.add(s);
                       }
                       json j;
                       j["mean"] = st.mean();
                       j["stderr"] = st.stderr_mean();
                       j["expected"] = d * t;
                       return ReplicaOutput{j, {}};
                   }});

    reg.push_back({{"holder-certificate",
                    "Hoelder(gamma) constant of a drift",
                    "empirical Hoelder constant over dyadic intervals of [0,1]",
                    concat({integer("d", "1", 1, 16, "dimension"), real("gamma", "0.5", 0.01, 1.0, "exponent"),
                            integer("levels", "16", 0, 26, "dyadic levels")},
                           drift_block("sqrt-cusp", {"zero", "linear", "sqrt-cusp", "weierstrass", "fbm", "csv"})),
                    {{"levels", "10"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       const HolderCertificate c = holder_constant(f, p.real("gamma"), static_cast<int>(p.integer("levels")));
                       json j;
                       j["constant"] = c.constant;
                       j["exponent"] = c.exponent;
                       j["t_lo"] = c.t_lo;
                       j["t_hi"] = c.t_hi;
                       j["drift"] = f.describe();
                       if (const auto b = f.certificate()) {
                           j["builtin_constant"] = b->constant;
                           j["builtin_exponent"] = b->exponent;
                           j["builtin_kind"] = b->kind == CertificateKind::analytic ? "analytic" : "empirical";
                       }
                       return ReplicaOutput{j, {}};
                   }});

    reg.push_back({{"hit-probability",
                    "hitting probabilities of B and B+f are comparable up to constants",
                    "Monte Carlo probability that x + W + f hits a ball",
                    concat({integer("d", "3", 2, 10, "dimension"), real("radius", "0.5", 1e-6, 1e6, "ball radius"),
                            real("distance", "2", 0.0, 1e6, "start distance from the center"),
                            real("rate", "0", 0.0, 1e6, "killing rate, 0 for none (d >= 3)"),
                            integer("trials", "10000", 1, 1e9, "Monte Carlo trials"),
                            integer("step_levels", "14", 1, 40, "finest step 2^-levels"),
                            real("escape_factor", "32", 1.5, 1e9, "escape radius factor")},
                           drift_block("zero", {"zero", "linear", "sqrt-cusp", "weierstrass", "csv"})),
                    {{"trials", "2000"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       std::vector<double> x(d, 0.0);
                       x[0] = p.real("distance");
                       HitOptions o;
                       o.escape_factor = p.real("escape_factor");
                       const TargetSet ball(BallTarget{std::vector<double>(d, 0.0), p.real("radius")});
                       const HitResult r = hit_prob(rng, x, f, ball, d, optional_rate(p.real("rate")),
                                                    static_cast<std::size_t>(p.integer("trials")),
                                                    static_cast<int>(p.integer("step_levels")), o);
                       json j = hit_json(r);
                       if (d >= 3 && p.real("rate") == 0.0 && p.text("drift") == "zero")
                           j["harmonic_value"] = std::min(1.0, std::pow(p.real("radius") / p.real("distance"), d - 2.0));
                       return ReplicaOutput{j, {}};
                   }});

    reg.push_back({{"capacity-sandwich",
                    "Cap_M(A)/2 <= P(B hits A) <= Cap_M(A) with the Martin kernel",
                    "Martin capacity of a surface discretization against Monte Carlo",
                    {choice("target", "ball", {"ball", "shell"}, "target shape"), real("radius", "0.5", 1e-6, 1e6, "outer radius"),
                     real("inner", "0.4", 1e-6, 1e6, "shell inner radius"), real("distance", "2", 0.0, 1e6, "start distance"),
                     integer("trials", "100000", 1, 1e9, "Monte Carlo trials"), integer("support", "1024", 16, 4096, "surface points"),
                     integer("step_levels", "14", 1, 40, "finest step 2^-levels"),
                     real("escape_factor", "1000", 1.5, 1e9, "escape radius factor")},
                    {{"trials", "2000"}, {"support", "256"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = 3;
                       const std::vector<double> c(d, 0.0);
                       const TargetSet target = p.text("target") == "ball"
                                                    ? TargetSet(BallTarget{c, p.real("radius")})
                                                    : TargetSet(ShellTarget{c, p.real("inner"), p.real("radius")});
                       SandwichOptions o;
                       o.support = static_cast<std::size_t>(p.integer("support"));
                       o.step_levels = static_cast<int>(p.integer("step_levels"));
                       o.hit.escape_factor = p.real("escape_factor");
                       const SandwichCheck s = capacity_sandwich_check(rng, target, {p.real("distance"), 0.0, 0.0}, d,
                                                                       static_cast<std::size_t>(p.integer("trials")), o);
                       json j;
                       j["cap"] = s.cap;
                       j["cap_coarse"] = s.cap_coarse;
                       j["discretization"] = s.discretization;
                       j["ci_width"] = s.ci_width;
                       j["slack"] = s.slack;
                       j["lower"] = s.lower;
                       j["upper"] = s.upper;
                       j["holds"] = s.holds;
                       j["mc"] = hit_json(s.mc);
                       j["support"] = s.support;
                       return ReplicaOutput{j, {}};
                   }});

    reg.push_back({{"intersection-equivalence",
                    "intersection equivalence of B and B+f for Hoelder(1/2) drift",
                    "hit(B+f)/hit(B) over dust targets of growing size",
                    concat({integer("targets", "5", 1, 8, "dust targets, target j has 4^j points"),
                            real("hit_radius", "0.05", 1e-4, 1.0, "dust hit radius"), real("side", "0.5", 1e-3, 10.0, "dust cube side"),
                            real("center", "1", 0.0, 100.0, "dust cube center on the e1 axis"),
                            integer("trials", "20000", 1, 1e9, "trials per process and target"),
                            integer("step_levels", "14", 1, 40, "finest step 2^-levels")},
                           drift_block("sqrt-cusp", {"zero", "linear", "sqrt-cusp", "weierstrass"})),
                    {{"trials", "500"}, {"targets", "2"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = 3;
                       const DriftSpec f = make_drift(p, d, rng);
                       const std::vector<double> start(d, 0.0);
                       Table t{{"target", "points", "hit_b", "hit_bf", "ratio"}, {}};
                       double lo = kInf, hi = 0.0;
                       for (long long k = 0; k < p.integer("targets"); ++k) {
                           const std::size_t n = std::size_t{1} << (2 * k);
                           std::vector<double> c;
                           for (std::size_t i = 0; i < n; ++i)
                               for (int j = 0; j < d; ++j)
                                   c.push_back((j == 0 ? p.real("center") : 0.0) + p.real("side") * (rng.uniform() - 0.5));
                           const TargetSet dust(DustTarget{PointSet(d, c), p.real("hit_radius")});
                           const auto trials = static_cast<std::size_t>(p.integer("trials"));
                           const int sl = static_cast<int>(p.integer("step_levels"));
                           const HitResult hb = hit_prob(rng, start, DriftSpec::zero(d), dust, d, std::nullopt, trials, sl);
                           const HitResult hf = hit_prob(rng, start, f, dust, d, std::nullopt, trials, sl);
                           const double ratio = hb.estimate > 0.0 ? hf.estimate / hb.estimate : kInf;
                           lo = std::min(lo, ratio);
                           hi = std::max(hi, ratio);
                           t.rows.push_back({static_cast<double>(k), static_cast<double>(n), hb.estimate, hf.estimate, ratio});
                       }
                       json j;
                       j["ratio_min"] = lo;
                       j["ratio_max"] = hi;
                       j["width"] = hi / lo;
                       return ReplicaOutput{j, t};
                   }});

    reg.push_back({{"recurrence",
                    "neighbourhood recurrence of B+f in the plane via the second moment method",
                    "occupation time of the unit disc on [n, n^2]",
                    concat({real("n", "16", 2.0, 1e4, "start of the time window"), real("w", "0", 0.0, 1e3, "start |w| along e1"),
                            integer("trials", "2000", 1, 1e8, "trials"), real("dt", "0.01", 1e-5, 1.0, "step near the disc")},
                           drift_block("zero", {"zero", "sqrt-cusp", "weierstrass"})),
                    {{"trials", "100"}, {"n", "4"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const DriftSpec f = make_drift(p, 2, rng);
                       const RecurrenceReport r = recurrence_statistic(rng, f, {p.real("w"), 0.0}, p.real("n"),
                                                                       static_cast<std::size_t>(p.integer("trials")), p.real("dt"));
                       json j;
                       j["p_visit"] = r.p_visit;
                       j["p_ci"] = {r.p_ci.low, r.p_ci.high};
                       j["mean_T"] = r.mean_T;
                       j["mean_T_stderr"] = r.mean_T_stderr;
                       j["second_moment"] = r.second_moment;
                       j["moment_ratio"] = r.moment_ratio;
                       return ReplicaOutput{j, {}};
                   }});

    reg.push_back({{"injectivity",
                    "P(B(A0) meets B(A1)) lies strictly between 0 and 1",
                    "epsilon-intersection of B on the dyadic sets A0 and 2 + A1",
                    {integer("depth", "14", 1, 16, "dyadic depth"), integer("trials", "20000", 1, 1e7, "trials"),
                     choice("partner", "A1", {"A1", "A0-shifted"}, "second set"),
                     {"eps", PT::real_list, "0.015625,0.00390625,0.0009765625", "intersection tolerances", 1e-9, 1e3, {}}},
                    {{"trials", "500"}, {"depth", "10"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const auto partner =
                           p.text("partner") == "A1" ? InjectivityPartner::A1 : InjectivityPartner::A0_shifted;
                       const InjectivityReport r = injectivity_experiment(rng, static_cast<int>(p.integer("depth")),
                                                                          static_cast<std::size_t>(p.integer("trials")),
                                                                          p.real_list("eps"), partner);
                       json j;
                       j["rows"] = json::array();
                       Table t{{"eps", "depth", "estimate", "ci_low", "ci_high"}, {}};
                       for (const auto& row : r.rows) {
                           j["rows"].push_back({{"eps", row.eps}, {"depth", row.depth}, {"estimate", row.estimate},
                                                {"ci", {row.ci.low, row.ci.high}}, {"hits", row.hits}});
                           t.rows.push_back({row.eps, static_cast<double>(row.depth), row.estimate, row.ci.low, row.ci.high});
                       }
                       return ReplicaOutput{j, t};
                   }});

    reg.push_back({{"boxcount-brownian-image",
                    "image dimension of B+f: dim >= max(2, dim f) bound with McKean's value 2 at f = 0",
                    "box-counting dimension of (B+f)[0,1]",
                    concat({integer("d", "2", 1, 8, "dimension"), integer("levels", "20", 8, 24, "log2 of the sample count")},
                           drift_block("zero", {"zero", "linear", "sqrt-cusp", "weierstrass", "fbm"})),
                    {{"levels", "12"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       const PathSample b = unit_path(rng, static_cast<int>(p.integer("levels")), d);
                       const DimEstimate e = boxcount_dim(image_cloud(b, f, whole_interval(0.0, 1.0)));
                       return ReplicaOutput{dim_json(e), dim_table(e)};
                   }});

    reg.push_back({{"boxcount-brownian-graph",
                    "graph dimension of B+f: 3/2 for d = 1, 2 for d >= 2",
                    "box-counting dimension of the graph {(t, B_t + f(t))}",
                    concat({integer("d", "1", 1, 8, "dimension"), integer("levels", "20", 8, 24, "log2 of the sample count")},
                           drift_block("zero", {"zero", "linear", "sqrt-cusp", "weierstrass", "fbm"})),
                    {{"levels", "12"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       const PathSample b = unit_path(rng, static_cast<int>(p.integer("levels")), d);
                       const DimEstimate e = boxcount_dim(graph_cloud(b, f, whole_interval(0.0, 1.0)));
                       return ReplicaOutput{dim_json(e), dim_table(e)};
                   }});

    reg.push_back({{"boxcount-fbm-image",
                    "image dimension of fractional Brownian motion: min(d, 1/alpha)",
                    "box-counting dimension of an fBM image",
                    {integer("d", "3", 1, 8, "dimension"), real("hurst", "0.4", 0.05, 0.95, "Hurst index"),
                     integer("levels", "20", 8, 22, "log2 of the sample count")},
                    {{"levels", "16"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const PathSample x = fbm_sample(rng, TimeGrid(0.0, 1.0, static_cast<int>(p.integer("levels"))), d,
                                                       p.real("hurst"));
                       const DimEstimate e = boxcount_dim(image_cloud(x, DriftSpec::zero(d), whole_interval(0.0, 1.0)));
                       return ReplicaOutput{dim_json(e), dim_table(e)};
                   }});

    reg.push_back({{"cuzick",
                    "image of B + (fBM_alpha, 0, 0) in d = 3 has dimension 3 - 2 alpha",
                    "box-counting dimension of B plus an fBM drift in one coordinate",
                    {real("alpha", "0.2", 0.05, 0.95, "Hurst index of the drift"), integer("d", "3", 2, 6, "dimension"),
                     integer("levels", "20", 8, 22, "log2 of the sample count"),
                     {"with_drift", PT::boolean, "true", "false gives the f = 0 control", std::nullopt, std::nullopt, {}}},
                    {{"levels", "16"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const DimEstimate e = cuzick_experiment(p.real("alpha"), static_cast<int>(p.integer("d")),
                                                               std::size_t{1} << p.integer("levels"), rng,
                                                               p.boolean("with_drift"));
                       return ReplicaOutput{dim_json(e), dim_table(e)};
                   }});

    reg.push_back({{"frostman-dimension",
                    "Frostman: Hausdorff dimension is the supremum of alpha with positive Riesz capacity",
                    "energy growth of min-energy measures over refinements",
                    {choice("family", "interval", {"interval", "cantor"}, "test set"), integer("level_min", "3", 1, 12, "coarsest level"),
                     integer("level_max", "9", 2, 12, "finest level"), real("alpha_max", "1.5", 0.05, 4.0, "largest alpha"),
                     real("alpha_step", "0.05", 0.005, 1.0, "alpha spacing"), real("threshold", "0.05", 1e-4, 1.0, "log10 growth cutoff"),
                     real("tol", "1e-6", 1e-12, 1e-2, "solver tolerance")},
                    {{"level_max", "6"}, {"alpha_step", "0.25"}}},
                   [](const ParamMap& p, RngStream&) {
                       const int lo = static_cast<int>(p.integer("level_min")), hi = static_cast<int>(p.integer("level_max"));
                       if (hi - lo + 1 < 3) throw ValidationError("labcli: frostman-dimension needs >= 3 levels");
                       std::vector<PointSet> fam;
                       for (int k = lo; k <= hi; ++k)
                           fam.push_back(p.text("family") == "interval" ? equispaced_points((std::size_t{1} << k) + 1)
                                                                         : cantor_points(k));
                       std::vector<double> alphas;
                       for (double a = 0.0; a <= p.real("alpha_max") + 1e-12; a += p.real("alpha_step")) alphas.push_back(a);
                       SolverOptions o;
                       o.tol = p.real("tol");
                       const FrostmanEstimate e = frostman_dim(fam, alphas, p.real("threshold"), o);
                       json j;
                       j["value"] = e.value;
                       j["bracket"] = {e.bracket_low, e.bracket_high};
                       j["expected"] = p.text("family") == "interval" ? 1.0 : std::log(2.0) / std::log(3.0);
                       Table t{{"alpha", "slope"}, {}};
                       for (std::size_t i = 0; i < e.alphas.size(); ++i) t.rows.push_back({e.alphas[i], e.slopes[i]});
                       return ReplicaOutput{j, t};
                   }});

    reg.push_back({{"riesz-capacity",
                    "Riesz alpha-capacity as the reciprocal of the minimal energy",
                    "min-energy measure on a finite support",
                    {choice("points", "cantor", {"interval", "cantor", "csv"}, "support"), integer("level", "6", 1, 12, "refinement level"),
                     real("alpha", "0.5", 0.0, 3.0, "Riesz exponent"),
                     {"file", PT::text, "", "support CSV for points = csv", std::nullopt, std::nullopt, {}},
                     real("tol", "1e-8", 1e-12, 1e-2, "solver tolerance")},
                    {{"level", "4"}}},
                   [](const ParamMap& p, RngStream&) {
                       const int k = static_cast<int>(p.integer("level"));
                       const PointSet s = p.text("points") == "interval" ? equispaced_points((std::size_t{1} << k) + 1)
                                          : p.text("points") == "cantor" ? cantor_points(k)
                                                                         : load_points_csv(p.text("file"));
                       SolverOptions o;
                       o.tol = p.real("tol");
                       const CapacityResult r = min_energy(s, RieszKernel{p.real("alpha")}, o);
                       json j;
                       j["capacity"] = r.capacity;
                       j["energy"] = r.energy;
                       j["iterations"] = r.iterations;
                       j["gap"] = r.gap;
                       j["converged"] = r.converged;
                       j["support"] = s.size();
                       Table t{{"x", "weight"}, {}};
                       for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.point(i)[0], r.weights[i]});
                       return ReplicaOutput{j, t};
                   }});

    reg.push_back({{"dyadic-sets",
                    "A0 and A1 have dimension 0 while A0 + A1 is a full interval",
                    "enumeration, covering counts and sumset coverage of the dyadic sets",
                    {integer("depth", "12", 1, kMaxDyadicDepth, "dyadic depth"),
                     choice("sumset", "A0+A1", {"A0+A1", "A0+A0"}, "pair checked for coverage")},
                    {}},
                   [](const ParamMap& p, RngStream&) {
                       const int depth = static_cast<int>(p.integer("depth"));
                       const DyadicSet a0 = build_dyadic_set(DyadicWhich::A0, depth);
                       const DyadicSet a1 = build_dyadic_set(DyadicWhich::A1, depth);
                       const CoverReport c = sumset_cover_check(a0, p.text("sumset") == "A0+A1" ? a1 : a0, depth);
                       json j;
                       j["a0_size"] = a0.size();
                       j["a1_size"] = a1.size();
                       j["covered"] = c.covered;
                       j["missing"] = c.missing;
                       j["checked"] = c.total;
                       j["offset"] = c.offset;
                       Table t{{"level", "a0_cover", "a1_cover"}, {}};
                       for (int l = 0; l <= depth; ++l)
                           t.rows.push_back({static_cast<double>(l), static_cast<double>(a0.covering_count(l)),
                                             static_cast<double>(a1.covering_count(l))});
                       return ReplicaOutput{j, t};
                   }});

    reg.push_back({{"doublepoint-scaling",
                    "double points of B+f exist for d <= 3 and fail for d >= 4; fBM drift restores them when alpha < 2/d",
                    "closest approach of the two halves of B+f under nested refinement",
                    concat({integer("d", "2", 1, 8, "dimension"), real("delta", "0.25", 1e-3, 0.99, "time gap"),
                            integer("level_min", "12", 2, 22, "coarsest level"), integer("level_max", "18", 2, 22, "finest level"),
                            integer("seeds", "20", 1, 10000, "paths")},
                           drift_block("zero", {"zero", "linear", "sqrt-cusp", "weierstrass", "fbm"})),
                    {{"level_min", "8"}, {"level_max", "11"}, {"seeds", "3"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       const ScalingReport r = doublepoint_scaling(rng.next_u64(), d, f, p.real("delta"),
                                                                   static_cast<int>(p.integer("level_min")),
                                                                   static_cast<int>(p.integer("level_max")),
                                                                   static_cast<int>(p.integer("seeds")));
                       return ReplicaOutput{scaling_json(r), scaling_table(r)};
                   }});

    reg.push_back({{"two-path-intersection",
                    "independent B1+f1 and B2+f2 intersect iff d <= 3",
                    "closest approach of two independent drifted paths",
                    concat({integer("d", "3", 1, 8, "dimension"), real("separation", "0.5", 0.0, 100.0, "distance between starts"),
                            integer("level_min", "10", 2, 22, "coarsest level"), integer("level_max", "16", 2, 22, "finest level"),
                            integer("seeds", "20", 1, 10000, "path pairs")},
                           drift_block("zero", {"zero", "linear", "sqrt-cusp", "weierstrass"})),
                    {{"level_min", "8"}, {"level_max", "11"}, {"seeds", "3"}}},
                   [](const ParamMap& p, RngStream& rng) {
                       const int d = static_cast<int>(p.integer("d"));
                       const DriftSpec f = make_drift(p, d, rng);
                       std::vector<double> x2(d, 0.0);
                       x2[0] = p.real("separation");
                       const ScalingReport r = two_path_intersection(
                           rng.next_u64(), d, f, f, std::vector<double>(d, 0.0), x2, static_cast<int>(p.integer("level_min")),
                           static_cast<int>(p.integer("level_max")), static_cast<int>(p.integer("seeds")));
                       return ReplicaOutput{scaling_json(r), scaling_table(r)};
                   }});

    reg.push_back({{"rprime",
                    "the two correlation inequalities for B + fBM_alpha increments",
                    "separated-grid decay of r' and the clustered lower bound",
                    {real("alpha", "0.3", 0.01, 0.49, "Hurst index"), real("a", "1", 1e-6, 1e6, "increment length"),
                     real("delta", "0.01", 1e-9, 1e6, "window"),
                     {"separations", PT::real_list, "10,100,1000", "minimum separations L", 1e-6, 1e12, {}},
                     integer("steps", "24", 2, 200, "grid steps per coordinate")},
                    {{"steps", "8"}}},
                   [](const ParamMap& p, RngStream&) {
                       RPrimeGrid g;
                       g.steps = static_cast<int>(p.integer("steps"));
                       const RPrimeReport r = verify_rprime_inequalities(p.real("alpha"), p.real("a"), p.real("delta"),
                                                                         p.real_list("separations"), g);
                       json j;
                       j["max_abs"] = r.max_abs;
                       j["decreasing"] = r.decreasing;
                       j["separated_violations"] = r.separated_violations;
                       j["clustered_min_ratio"] = r.clustered_min_ratio;
                       j["clustered_points"] = r.clustered_points;
                       j["clustered_violations"] = r.clustered_violations;
                       Table t{{"L", "max_abs"}, {}};
                       for (std::size_t i = 0; i < r.L.size(); ++i) t.rows.push_back({r.L[i], r.max_abs[i]});
                       return ReplicaOutput{j, t};
                   }});

    return reg;
}

void collect_numbers(const json& j, const std::string& prefix, std::map<std::string, std::vector<double>>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it->is_number()) out[prefix + it.key()].push_back(it->get<double>());
        else if (it->is_boolean()) out[prefix + it.key()].push_back(it->get<bool>() ? 1.0 : 0.0);
    }
}

}  // namespace

const std::vector<Experiment>& experiment_registry() {
    static const std::vector<Experiment> reg = build_registry();
    return reg;
}

const Experiment& find_experiment(const std::string& name) {
    for (const auto& e : experiment_registry())
        if (e.info.name == name) return e;
    throw ValidationError("labcli: unknown experiment '" + name + "'");
}

ParamMap resolve_parameters(const ExperimentInfo& info, const std::map<std::string, std::string>& raw) {
    for (const auto& [k, v] : raw) {
        const bool known = std::any_of(info.params.begin(), info.params.end(), [&](const ParamSpec& p) { return p.name == k; });
        if (!known) throw ValidationError("labcli: parameter '" + k + "': unknown for experiment '" + info.name + "'");
    }
    ParamMap out;
    for (const auto& p : info.params) {
        const auto it = raw.find(p.name);
        out.set(p.name, parse_value(p, it == raw.end() ? p.default_value : it->second));
    }
    return out;
}

ExperimentConfig example_config(const ExperimentInfo& info) {
    ExperimentConfig cfg;
    cfg.experiment = info.name;
    cfg.seed = 1;
    cfg.replicas = 1;
    auto& params = cfg.parameters();
    for (const auto& p : info.params) params[p.name] = p.default_value;
    for (const auto& [k, v] : info.example) params[k] = v;
    return cfg;
}

json experiment_schema(const ExperimentInfo& info) {
    json props = json::object();
    json required = json::array();
    for (const auto& p : info.params) {
        json s;
        switch (p.type) {
            case PT::integer: s["type"] = "integer"; break;
            case PT::real: s["type"] = "number"; break;
            case PT::boolean: s["type"] = "boolean"; break;
            case PT::text: s["type"] = "string"; break;
            case PT::real_list:
                s["type"] = "array";
                s["minItems"] = 1;
                s["items"] = {{"type", "number"}};
                break;
        }
        if (p.type == PT::real_list) {
            if (p.min) s["items"]["minimum"] = *p.min;
            if (p.max) s["items"]["maximum"] = *p.max;
        } else if (p.type == PT::integer || p.type == PT::real) {
            if (p.min) s["minimum"] = *p.min;
            if (p.max) s["maximum"] = *p.max;
        }
        if (!p.choices.empty()) s["enum"] = p.choices;
        s["default"] = p.default_value;
        s["description"] = p.help;
        props[p.name] = s;
        required.push_back(p.name);
    }
    json schema;
    schema["$schema"] = "https://json-schema.org/draft/2020-12/schema";
    schema["title"] = info.name;
    schema["description"] = info.anchor;
    schema["type"] = "object";
    schema["additionalProperties"] = false;
    schema["required"] = {"experiment", "seed", "replicas", "parameters"};
    schema["properties"] = {
        {"experiment", {{"const", info.name}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}}},
        {"replicas", {{"type", "integer"}, {"minimum", 1}}},
        {"threads", {{"type", "integer"}, {"minimum", 1}, {"maximum", 256}}},
        {"parameters", {{"type", "object"}, {"additionalProperties", false}, {"required", required}, {"properties", props}}}};
    return schema;
}

json config_echo(const ExperimentConfig& cfg, const ParamMap& params) {
    json j;
    j["experiment"] = cfg.experiment;
    j["seed"] = cfg.seed;
    j["replicas"] = cfg.replicas;
    j["threads"] = cfg.threads;
    j["parameters"] = params.to_json();
    return j;
}

ExperimentConfig config_from_echo(const json& echo) {
    ExperimentConfig cfg;
    try {
        cfg.experiment = echo.at("experiment").get<std::string>();
        cfg.seed = echo.at("seed").get<std::uint64_t>();
        cfg.replicas = echo.at("replicas").get<long long>();
        if (echo.contains("threads")) cfg.threads = echo.at("threads").get<int>();
        auto& params = cfg.parameters();
        for (auto it = echo.at("parameters").begin(); it != echo.at("parameters").end(); ++it) {
            const json& v = it.value();
            if (v.is_string()) {
                params[it.key()] = v.get<std::string>();
            } else if (v.is_array()) {
                std::string s;
                for (const auto& x : v) {
                    std::ostringstream os;
                    os << std::setprecision(17) << x.get<double>();
                    s += (s.empty() ? "" : ",") + os.str();
                }
                params[it.key()] = s;
            } else if (v.is_number_float()) {
                std::ostringstream os;
                os << std::setprecision(17) << v.get<double>();
                params[it.key()] = os.str();
            } else {
                params[it.key()] = v.dump();
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("labcli: malformed config echo: ") + e.what());
    }
    return cfg;
}

std::vector<std::string> validate_against_schema(const json& schema, const json& doc) {
    std::vector<std::string> errs;
    std::function<void(const json&, const json&, const std::string&)> check = [&](const json& s, const json& d,
                                                                                const std::string& path) {
        if (s.contains("const") && d != s["const"]) errs.push_back(path + ": expected " + s["const"].dump());
        if (s.contains("type")) {
            const std::string t = s["type"];
            const bool ok = (t == "integer" && d.is_number_integer()) || (t == "number" && d.is_number()) ||
                            (t == "boolean" && d.is_boolean()) || (t == "string" && d.is_string()) ||
                            (t == "array" && d.is_array()) || (t == "object" && d.is_object());
            if (!ok) {
                errs.push_back(path + ": expected " + t);
                return;
            }
        }
        if (d.is_number()) {
            if (s.contains("minimum") && d.get<double>() < s["minimum"].get<double>()) errs.push_back(path + ": below minimum");
            if (s.contains("maximum") && d.get<double>() > s["maximum"].get<double>()) errs.push_back(path + ": above maximum");
        }
        if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), d) == s["enum"].end())
            errs.push_back(path + ": not an allowed value");
        if (d.is_array()) {
            if (s.contains("minItems") && d.size() < s["minItems"].get<std::size_t>()) errs.push_back(path + ": too few items");
            if (s.contains("items"))
                for (std::size_t i = 0; i < d.size(); ++i) check(s["items"], d[i], path + "[" + std::to_string(i) + "]");
        }
        if (d.is_object()) {
            if (s.contains("required"))
                for (const auto& r : s["required"])
                    if (!d.contains(r.get<std::string>())) errs.push_back(path + ": missing '" + r.get<std::string>() + "'");
            const json props = s.value("properties", json::object());
            for (auto it = d.begin(); it != d.end(); ++it) {
                if (props.contains(it.key())) check(props[it.key()], it.value(), path + "." + it.key());
                else if (s.contains("additionalProperties") && s["additionalProperties"] == false)
                    errs.push_back(path + ": unexpected property '" + it.key() + "'");
            }
        }
    };
    check(schema, doc, "$");
    return errs;
}

json catalog() {
    json out = json::array();
    for (const auto& e : experiment_registry()) {
        json item;
        item["name"] = e.info.name;
        item["anchor"] = e.info.anchor;
        item["summary"] = e.info.summary;
        item["parameters"] = json::array();
        for (const auto& p : e.info.params)
            item["parameters"].push_back({{"name", p.name}, {"type", type_name(p.type)}, {"default", p.default_value}, {"help", p.help}});
        item["schema"] = experiment_schema(e.info);
        const ExperimentConfig ex = example_config(e.info);
        item["example_config"] = to_config_text(ex);
        out.push_back(item);
    }
    return out;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment.empty()) throw ValidationError("labcli: no experiment given");
    if (cfg.replicas < 1) throw ValidationError("labcli: replicas must be >= 1");
    const Experiment& exp = find_experiment(cfg.experiment);
    const ParamMap params = resolve_parameters(exp.info, cfg.parameters());

    const auto t0 = std::chrono::steady_clock::now();
    const auto n = static_cast<std::size_t>(cfg.replicas);
    std::vector<ReplicaOutput> outs(n);
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t i) {
        try {
            RngStream rng(cfg.seed, i);
            outs[i] = exp.run(params, rng);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += threads) work(i);
            });
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunOutcome out;
    json& rec = out.record;
    rec["artifact"] = kArtifactName;
    rec["artifact_version"] = artifact_version();
    rec["experiment"] = exp.info.name;
    rec["anchor"] = exp.info.anchor;
    rec["config"] = config_echo(cfg, params);
    rec["wall_time_s"] = wall;
    rec["replicas"] = json::array();
    std::map<std::string, std::vector<double>> numbers;
    for (std::size_t i = 0; i < n; ++i) {
        rec["replicas"].push_back({{"replica", i}, {"stream", {cfg.seed, i}}, {"output", outs[i].value}});
        collect_numbers(outs[i].value, "", numbers);
        if (!outs[i].table.header.empty()) {
            if (out.table.header.empty()) {
                out.table.header = {"replica"};
                out.table.header.insert(out.table.header.end(), outs[i].table.header.begin(), outs[i].table.header.end());
            }
            for (const auto& row : outs[i].table.rows) {
                std::vector<double> r = {static_cast<double>(i)};
                r.insert(r.end(), row.begin(), row.end());
                out.table.rows.push_back(std::move(r));
            }
        }
    }
    json summary = json::object();
    for (const auto& [k, v] : numbers) {
        RunningStats st;
        for (double x : v) st.add(x);
        summary[k] = {{"mean", st.mean()},
                      {"min", *std::min_element(v.begin(), v.end())},
                      {"max", *std::max_element(v.begin(), v.end())},
                      {"count", v.size()}};
    }
    rec["summary"] = summary;
    return out;
}

void write_table_csv(const Table& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("labcli: cannot write " + path);
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << "\n" << std::setprecision(17);
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

}  // namespace bmdrift
