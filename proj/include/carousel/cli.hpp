#pragma once

// Command-line front end: simulate, exact, limit, asym and table1.
//
// Exit codes: 0 success, 2 bad arguments, 3 numerical failure,
// 4 a --check comparison failed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carousel/asym.hpp"
#include "carousel/core.hpp"
#include "carousel/exact.hpp"
#include "carousel/limit.hpp"
#include "carousel/report.hpp"
#include "carousel/sim.hpp"

namespace carousel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadArgs = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitCheckFailed = 4;

/// Reference mean travel times as printed to four decimals: n, E(T_n), scaled E, upper estimate, scaled
/// upper, approximation.
struct ReferenceRow {
    std::size_t n;
    double mean;
    double mean_scaled;
    double upper;
    double upper_scaled;
    double approx;
    double approx_scaled;
};

inline constexpr std::array<ReferenceRow, 6> kReferenceTable = {{
    {3, 0.5262, 1.8952, 0.5433, 1.8268, 0.4605, 2.1578},
    {5, 0.6591, 2.0454, 0.6670, 1.9980, 0.6404, 2.1578},
    {10, 0.8052, 2.1423, 0.8068, 2.1252, 0.8038, 2.1578},
    {15, 0.8653, 2.1548, 0.8658, 2.1472, 0.8651, 2.1578},
    {20, 0.8972, 2.1592, 0.8976, 2.1504, 0.8972, 2.1578},
    {30, 0.9304, 2.1572, 0.9306, 2.1514, 0.9304, 2.1578},
}};

/// Half a unit in the fourth decimal: the rounding slack of a printed value.
inline constexpr double kPrintedSlack = 5e-5;

inline const ReferenceRow* find_reference(std::size_t n)
{
    for (const auto& r : kReferenceTable)
        if (r.n == n)
            return &r;
    return nullptr;
}

class bad_arguments : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// "start:stop:count", linear or geometric.
inline std::vector<double> parse_grid(const std::string& spec, bool geometric)
{
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':'))
        parts.push_back(item);
    if (parts.size() != 3)
        throw bad_arguments("grid must look like start:stop:count, got '" + spec + "'");
    double a = 0.0, b = 0.0;
    long count = 0;
    try {
        std::size_t used = 0;
        a = std::stod(parts[0], &used);
        if (used != parts[0].size())
            throw std::invalid_argument("");
        b = std::stod(parts[1], &used);
        if (used != parts[1].size())
            throw std::invalid_argument("");
        count = std::stol(parts[2], &used);
        if (used != parts[2].size())
            throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw bad_arguments("cannot parse grid '" + spec + "'");
    }
    if (count < 1)
        throw bad_arguments("grid count must be at least 1");
    if (geometric && !(a > 0.0 && b > 0.0))
        throw bad_arguments("geometric grid endpoints must be positive");
    std::vector<double> grid;
    for (long i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        grid.push_back(geometric ? a * std::pow(b / a, f) : a + (b - a) * f);
    }
    if (count > 1)
        grid.back() = b;
    return grid;
}

struct GridOptions {
    std::vector<double> t;
    std::string t_grid;
    std::string t_log_grid;

    std::vector<double> resolve(bool required) const
    {
        const int given = (t.empty() ? 0 : 1) + (t_grid.empty() ? 0 : 1) + (t_log_grid.empty() ? 0 : 1);
        if (given > 1)
            throw bad_arguments("use only one of --t, --t-grid, --t-log-grid");
        if (given == 0) {
            if (required)
                throw bad_arguments("a t value or grid is required (--t, --t-grid or --t-log-grid)");
            return {};
        }
        if (!t.empty())
            return t;
        if (!t_grid.empty())
            return parse_grid(t_grid, false);
        return parse_grid(t_log_grid, true);
    }
};

struct CommonOptions {
    std::string format = "csv";
    std::string out;
    std::size_t workers = 1;
    std::size_t chunk = sim::BatchLayout{}.chunk_size;
    std::optional<std::uint64_t> seed;
    bool check = false;
};

struct Invocation {
    std::string command_line;
    report::Report report;
    bool check_failed = false;
    bool numerical_failure = false; ///< some rows were flagged; the report is still written
    std::vector<std::string> messages;
};

namespace detail {

inline std::uint64_t resolve_seed(const CommonOptions& c, std::ostream& err)
{
    if (c.seed)
        return *c.seed;
    if (c.check)
        throw bad_arguments("--check requires an explicit --seed");
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed: " << seed << '\n';
    return seed;
}

inline sim::BatchLayout layout_of(const CommonOptions& c)
{
    if (c.workers < 1)
        throw bad_arguments("--workers must be at least 1");
    if (c.chunk < 1)
        throw bad_arguments("--chunk must be at least 1");
    return sim::BatchLayout{c.workers, c.chunk};
}

inline void base_header(Invocation& inv, const std::string& command)
{
    inv.report.set_header("tool_version", report::kToolVersion);
    inv.report.set_header("command", command);
    inv.report.set_header("invocation", inv.command_line);
}

inline void sampling_header(Invocation& inv, std::uint64_t seed, std::size_t reps, const sim::BatchLayout& l)
{
    inv.report.set_header("seed", std::to_string(seed));
    inv.report.set_header("reps", std::to_string(reps));
    inv.report.set_header("workers", std::to_string(l.workers));
    inv.report.set_header("chunk_size", std::to_string(l.chunk_size));
}

inline void fail_check(Invocation& inv, const std::string& what)
{
    inv.check_failed = true;
    inv.messages.push_back("check failed: " + what);
}

} // namespace detail

// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::size_t n = 0;
    std::string strategy = "optimal";
    std::size_t reps = 100000;
    bool turn_pmf = false;
};

inline void cmd_simulate(const SimulateOptions& o, const CommonOptions& c, Invocation& inv, std::ostream& err)
{
    if (o.n < 1)
        throw bad_arguments("--n must be at least 1");
    if (o.reps < 1000)
        throw bad_arguments("--reps must be at least 1000");
    sim::Strategy strategy;
    try {
        strategy = sim::Strategy::parse(o.strategy);
    } catch (const std::invalid_argument& e) {
        throw bad_arguments(e.what());
    }
    if (strategy.kind == sim::Strategy::Kind::mstep && o.turn_pmf && 2 * strategy.m >= o.n)
        throw bad_arguments("the m-step turn-count law needs 2m < n");
    if (strategy.kind == sim::Strategy::Kind::nearest && o.turn_pmf)
        throw bad_arguments("--turn-pmf is not defined for the nearest-item strategy");
    const auto layout = detail::layout_of(c);
    const std::uint64_t seed = detail::resolve_seed(c, err);

    detail::base_header(inv, "simulate");
    detail::sampling_header(inv, seed, o.reps, layout);
    inv.report.set_header("n", std::to_string(o.n));
    inv.report.set_header("strategy", strategy.to_string());
    auto& rep = inv.report;

    if (o.turn_pmf) {
        const auto pmf = sim::estimate_turn_count_pmf(o.n, strategy, o.reps, seed, layout);
        rep.set_columns({"k", "frequency", "std_error", "reference", "tail_frequency", "tail_bound"});
        const bool mstep = strategy.kind == sim::Strategy::Kind::mstep;
        // tails[k] = frequency of K > k, summed from the top to avoid rounding residue.
        std::vector<double> tails(pmf.size(), 0.0);
        for (std::size_t k = pmf.size() - 1; k-- > 0;)
            tails[k] = tails[k + 1] + pmf[k + 1].frequency;
        const double r = static_cast<double>(o.reps);
        for (const auto& f : pmf) {
            const double tail = tails[f.k];
            const double reference = mstep ? sim::mstep_turn_probability(f.k, strategy.m)
                                           : std::ldexp(1.0, -static_cast<int>(f.k) - 1);
            const double bound = std::ldexp(1.0, -static_cast<int>(f.k));
            rep.add_row({static_cast<std::int64_t>(f.k), f.frequency, f.std_error, reference, tail,
                         bound});
            if (c.check) {
                if (mstep) {
                    const double sigma = std::sqrt(reference * (1.0 - reference) / r);
                    if (std::abs(f.frequency - reference) > 3.0 * sigma + 1e-12)
                        detail::fail_check(inv, "P(K = " + std::to_string(f.k) + ") off the m-step law by more than 3 sigma");
                } else if (strategy.kind == sim::Strategy::Kind::optimal) {
                    if (tail >= bound + 3.0 * std::sqrt(tail * (1.0 - tail) / r))
                        detail::fail_check(inv, "P(K > " + std::to_string(f.k) + ") exceeds 2^-k");
                }
            }
        }
        if (c.check && !mstep && strategy.kind != sim::Strategy::Kind::optimal)
            throw bad_arguments("--check has no reference for this configuration");
        return;
    }

    const auto s = sim::estimate_mean_travel_time(o.n, strategy, o.reps, seed, layout);
    const double scaled = static_cast<double>(o.n + 1) * (1.0 - s.estimate);
    rep.set_columns({"n", "strategy", "reps", "seed", "mean", "std_error", "scaled_gap"});
    rep.add_row({static_cast<std::int64_t>(o.n), strategy.to_string(), static_cast<std::int64_t>(o.reps),
                 std::to_string(seed), s.estimate, s.std_error, scaled});
    if (c.check) {
        const ReferenceRow* ref = find_reference(o.n);
        if (strategy.kind == sim::Strategy::Kind::optimal && ref) {
            if (std::abs(s.estimate - ref->mean) > 3.0 * s.std_error + kPrintedSlack)
                detail::fail_check(inv, "mean differs from the reference table");
        } else if (strategy.kind == sim::Strategy::Kind::optimal && o.n == 1) {
            if (std::abs(s.estimate - 0.25) > 3.0 * s.std_error)
                detail::fail_check(inv, "E(T_1) differs from 1/4");
        } else {
            throw bad_arguments("--check has no reference for this configuration");
        }
    }
}

// ---------------------------------------------------------------------------

struct ExactOptions {
    std::size_t n = 0;
    GridOptions grid;
    double tol = exact::kDefaultCdfTol;
    bool mc_check = false;
    std::size_t reps = 1000000;
};

inline void cmd_exact(const ExactOptions& o, const CommonOptions& c, Invocation& inv, std::ostream& err)
{
    if (o.n < 1)
        throw bad_arguments("--n must be at least 1");
    if (!(o.tol > 0.0))
        throw bad_arguments("--tol must be positive");
    const auto grid = o.grid.resolve(true);
    for (double t : grid)
        if (!(t >= 0.0 && t <= 1.0))
            throw bad_arguments("t values must lie in [0, 1]");
    if (o.mc_check && o.reps < 1000)
        throw bad_arguments("--reps must be at least 1000");

    detail::base_header(inv, "exact");
    inv.report.set_header("n", std::to_string(o.n));
    inv.report.set_header("tol", report::format_double(o.tol));

    std::vector<double> mc_times;
    if (o.mc_check) {
        const auto layout = detail::layout_of(c);
        const std::uint64_t seed = detail::resolve_seed(c, err);
        detail::sampling_header(inv, seed, o.reps, layout);
        mc_times = sim::sample_travel_times(o.n, sim::Strategy::optimal(), o.reps, seed, layout);
        std::sort(mc_times.begin(), mc_times.end());
    }

    const bool closed = o.n <= 3;
    std::vector<std::string> columns{"t", "cdf", "abs_error", "status"};
    if (closed)
        columns.push_back("closed_form");
    if (o.mc_check) {
        columns.push_back("mc");
        columns.push_back("mc_std_error");
    }
    inv.report.set_columns(columns);

    for (double t : grid) {
        QuadratureResult q;
        std::string status = "ok";
        try {
            q = exact::tn_cdf(o.n, t, o.tol);
        } catch (const quadrature_error& e) {
            q = e.partial();
            status = "tolerance_not_reached";
            inv.numerical_failure = true;
            inv.messages.push_back("quadrature did not reach --tol at t = " + report::format_double(t));
        }
        std::vector<report::Cell> row{t, q.value, q.abs_error_estimate, status};
        if (closed) {
            const double cf = exact::tn_cdf_closed_form(o.n, t);
            row.push_back(cf);
            if (c.check && std::abs(cf - q.value) > 1e-6)
                detail::fail_check(inv, "closed form disagrees at t = " + report::format_double(t));
        }
        if (o.mc_check) {
            // P(T_n >= 1 - t): fraction of sorted times at or above 1 - t.
            const auto it = std::lower_bound(mc_times.begin(), mc_times.end(), 1.0 - t);
            const double r = static_cast<double>(mc_times.size());
            const double p = static_cast<double>(mc_times.end() - it) / r;
            const double se = std::sqrt(p * (1.0 - p) / r);
            row.push_back(p);
            row.push_back(se);
            if (c.check && std::abs(p - q.value) > 4.0 * std::max(se, 1.0 / r) + q.abs_error_estimate)
                detail::fail_check(inv, "Monte Carlo column off by more than 4 sigma at t = " + report::format_double(t));
        }
        inv.report.add_row(std::move(row));
    }
    if (c.check && !closed && !o.mc_check)
        throw bad_arguments("--check needs n <= 3 or --mc-check");
}

// ---------------------------------------------------------------------------

struct LimitOptions {
    GridOptions grid;
    bool cdf = false;
    bool max_cdf = false;
    bool extended = false;
    int digits = limit::kMaxDigits;
    bool mean = false;
    int moments = 0;
    int cumulants = 0;
    std::size_t approx_n = 0;
};

inline void cmd_limit(const LimitOptions& o, const CommonOptions& c, Invocation& inv)
{
    const auto grid = o.grid.resolve(o.cdf || o.max_cdf);
    if (!o.cdf && !o.max_cdf && !o.mean && o.moments == 0 && o.cumulants == 0 && o.approx_n == 0)
        throw bad_arguments("nothing to compute: pass --cdf, --max-cdf, --mean, --moments, --cumulants or --approx-n");
    if (!grid.empty() && !o.cdf && !o.max_cdf)
        throw bad_arguments("a t grid needs --cdf or --max-cdf");
    for (double t : grid) {
        if (!(t > 0.0))
            throw bad_arguments("t values must be positive");
        if (!o.extended && t < limit::kMinDoubleT)
            throw bad_arguments("t = " + report::format_double(t) +
                                " is below the double-precision floor 0.2; pass --extended");
    }
    if (o.moments < 0 || o.moments > 5)
        throw bad_arguments("--moments must be in [1, 5]");
    if (o.cumulants < 0 || o.cumulants > 50)
        throw bad_arguments("--cumulants must be in [1, 50]");
    if (o.digits < 1 || o.digits > limit::kMaxDigits)
        throw bad_arguments("--digits must be in [1, 200]");

    detail::base_header(inv, "limit");
    inv.report.set_header("extended", o.extended ? "true" : "false");
    if (o.mean)
        inv.report.set_header("quadrature_tol", "1e-12");
    if (o.extended)
        inv.report.set_header("max_digits", std::to_string(o.digits));
    auto& rep = inv.report;
    rep.set_columns({"quantity", "argument", "value", "bound"});

    auto eval_cdf = [&](double t) {
        return o.extended ? limit::limit_cdf_extended(t, o.digits) : limit::limit_cdf(t);
    };
    if (o.cdf) {
        for (double t : grid) {
            const auto s = eval_cdf(t);
            rep.add_row({std::string("P"), t, s.value, s.truncation_bound});
        }
    }
    if (o.max_cdf) {
        for (double t : grid) {
            const auto s = eval_cdf(t);
            rep.add_row({std::string("P_squared"), t, s.value * s.value, 2.0 * s.truncation_bound});
        }
    }
    if (o.mean) {
        const auto m = limit::limit_max_moment(1);
        const auto q = limit::limit_max_moment_by_quadrature(1);
        rep.add_row({std::string("limit_mean"), 1.0, m.value, m.truncation_bound});
        rep.add_row({std::string("limit_mean_quadrature"), 1.0, q.value, q.abs_error_estimate});
        if (c.check) {
            if (std::abs(m.value - 2.1578) > 5e-4)
                detail::fail_check(inv, "limiting mean differs from 2.1578");
            if (std::abs(m.value - q.value) > 1e-6)
                detail::fail_check(inv, "series and quadrature limiting means disagree");
        }
    }
    for (int k = 1; k <= o.moments; ++k) {
        const auto m = limit::limit_max_moment(k);
        rep.add_row({std::string("max_moment"), static_cast<double>(k), m.value, m.truncation_bound});
    }
    if (o.cumulants > 0) {
        const auto table = limit::cumulants(static_cast<std::size_t>(o.cumulants));
        for (int nu = 1; nu <= o.cumulants; ++nu)
            rep.add_row({std::string("cumulant"), static_cast<double>(nu), table[static_cast<std::size_t>(nu)], 0.0});
    }
    if (o.approx_n > 0) {
        const double a = limit::mean_travel_time_approx(o.approx_n);
        rep.add_row({std::string("approx_mean"), static_cast<double>(o.approx_n), a, 0.0});
        if (c.check) {
            if (const auto* ref = find_reference(o.approx_n); ref && std::abs(a - ref->approx) > kPrintedSlack)
                detail::fail_check(inv, "approximation differs from the reference table");
        }
    }
}

// ---------------------------------------------------------------------------

struct AsymOptions {
    GridOptions grid;
    std::string functional = "J";
    double q = 0.5;
    bool compare = false;
    bool constants = false;
    bool residuals = false;
};

inline void cmd_asym(const AsymOptions& o, const CommonOptions& c, Invocation& inv)
{
    const int modes = (o.constants ? 1 : 0) + (o.residuals ? 1 : 0);
    if (modes > 1)
        throw bad_arguments("use only one of --constants and --residuals");
    const auto grid = o.grid.resolve(modes == 0);
    if (modes == 1 && !grid.empty())
        throw bad_arguments("--constants and --residuals do not take a t grid");
    if (o.functional != "J" && o.functional != "qI" && o.functional != "Jq")
        throw bad_arguments("--functional must be J, qI or Jq");
    if (!(o.q > 0.0 && o.q < 1.0))
        throw bad_arguments("--q must lie in (0, 1)");
    if (o.compare && o.functional != "J")
        throw bad_arguments("--compare is only available for J");
    for (double t : grid)
        if (!(t > 0.0 && t < asym::kAsymptoticMaxT))
            throw bad_arguments("t values must lie in (0, 0.2)");

    detail::base_header(inv, "asym");
    auto& rep = inv.report;

    if (o.constants) {
        rep.set_columns({"theta", "A", "B", "C", "theta3", "C_times_theta3", "prop51_lhs", "prop51_rhs",
                         "prop51_rel_gap"});
        const double reference = asym::c_theta_constant();
        for (int i = 0; i < 20; ++i) {
            const double theta = 0.05 * i;
            const auto abc = asym::abc_theta_terms(theta);
            const double th3 = asym::theta_fn(asym::ThetaParams{0.5, theta});
            const auto p = asym::check_prop51(theta);
            rep.add_row({theta, abc.A, abc.B, abc.C, th3, abc.C * th3, p.lhs, p.rhs, p.rel_gap});
            if (c.check) {
                if (std::abs(abc.C * th3 - reference) > 1e-10 * reference)
                    detail::fail_check(inv, "C * theta3 not constant at theta = " + report::format_double(theta));
                if (std::abs(th3 - 1.0) >= 1e-12)
                    detail::fail_check(inv, "theta3 deviates from 1 at theta = " + report::format_double(theta));
                if (p.rel_gap >= 1e-10)
                    detail::fail_check(inv, "product identity gap at theta = " + report::format_double(theta));
            }
        }
        if (c.check && std::abs(reference - 0.01013) > 1e-5)
            detail::fail_check(inv, "constant differs from 0.01013");
        return;
    }

    if (o.residuals) {
        rep.set_columns({"k", "lambda", "mean_residual", "log_phi_residual", "variance_residual"});
        std::optional<asym::ExpansionResiduals> prev;
        for (int k = 10; k <= 30; ++k) {
            const double lambda = std::ldexp(std::exp2(0.3), k);
            const auto r = asym::expansion_residuals(lambda);
            rep.add_row({static_cast<std::int64_t>(k), lambda, r.mean, r.log_phi, r.variance});
            if (c.check && prev) {
                if (std::abs(r.mean) >= 0.75 * std::abs(prev->mean) ||
                    std::abs(r.log_phi) >= 0.75 * std::abs(prev->log_phi) ||
                    std::abs(r.variance) >= 0.75 * std::abs(prev->variance))
                    detail::fail_check(inv, "residuals did not shrink by 0.75 at k = " + std::to_string(k));
            }
            prev = r;
        }
        return;
    }

    inv.report.set_header("functional", o.functional);
    inv.report.set_header("q", report::format_double(o.functional == "J" ? 0.5 : o.q));
    std::vector<std::string> columns{"t", "psi", "frac_psi", "theta3", "asymptotic"};
    if (o.compare) {
        columns.push_back("exact");
        columns.push_back("ratio");
    }
    rep.set_columns(columns);
    const double q = o.functional == "J" ? 0.5 : o.q;
    for (double t : grid) {
        const double p = asym::psi(t, q);
        const double frac = asym::detail::psi_fraction(p);
        const double th3 = asym::theta_fn(asym::ThetaParams{q, frac});
        double value = 0.0;
        if (o.functional == "J")
            value = asym::asymptotic_cdf_J(t);
        else if (o.functional == "qI")
            value = asym::asymptotic_cdf_qI(t, q);
        else
            value = asym::asymptotic_cdf_Jq(t, q);
        std::vector<report::Cell> row{t, p, frac, th3, value};
        if (o.compare) {
            const double exact = limit::limit_cdf_extended(t).value;
            row.push_back(exact);
            row.push_back(value / exact);
        }
        rep.add_row(std::move(row));
    }
    if (c.check)
        throw bad_arguments("--check is available with --constants or --residuals");
}

// ---------------------------------------------------------------------------

struct Table1Options {
    std::size_t reps = 1000000;
};

inline void cmd_table1(const Table1Options& o, const CommonOptions& c, Invocation& inv, std::ostream& err)
{
    if (o.reps < 1000)
        throw bad_arguments("--reps must be at least 1000");
    const auto layout = detail::layout_of(c);
    const std::uint64_t seed = detail::resolve_seed(c, err);
    detail::base_header(inv, "table1");
    detail::sampling_header(inv, seed, o.reps, layout);
    auto& rep = inv.report;
    rep.set_columns({"n", "mc_mean", "mc_std_error", "mc_scaled", "upper_estimate", "upper_scaled", "approximation",
                     "approximation_scaled", "flags"});
    for (const auto& ref : kReferenceTable) {
        const double np1 = static_cast<double>(ref.n + 1);
        const auto s = sim::estimate_mean_travel_time(ref.n, sim::Strategy::optimal(), o.reps,
                                                      derive_seed(seed, ref.n), layout);
        const double upper = exact::upper_estimate_mean(ref.n);
        const double approx = limit::mean_travel_time_approx(ref.n);
        const double mc_scaled = np1 * (1.0 - s.estimate);
        const double upper_scaled = np1 * (1.0 - upper);
        const double approx_scaled = np1 * (1.0 - approx);

        // Scaled printed cells were derived from the rounded unscaled ones, so
        // their slack grows by the factor n + 1.
        std::vector<std::string> flags;
        const double mc_tol = 3.0 * s.std_error + kPrintedSlack;
        if (std::abs(s.estimate - ref.mean) > mc_tol)
            flags.push_back("mc_mean");
        if (std::abs(mc_scaled - ref.mean_scaled) > np1 * mc_tol)
            flags.push_back("mc_scaled");
        if (std::abs(upper - ref.upper) > kPrintedSlack)
            flags.push_back("upper_estimate");
        if (std::abs(upper_scaled - ref.upper_scaled) > np1 * kPrintedSlack)
            flags.push_back("upper_scaled");
        if (std::abs(approx - ref.approx) > kPrintedSlack)
            flags.push_back("approximation");
        if (std::abs(approx_scaled - ref.approx_scaled) > np1 * kPrintedSlack)
            flags.push_back("approximation_scaled");

        std::string joined;
        for (const auto& f : flags)
            joined += (joined.empty() ? "" : ";") + f;
        rep.add_row({static_cast<std::int64_t>(ref.n), s.estimate, s.std_error, mc_scaled, upper, upper_scaled, approx,
                     approx_scaled, joined});
        if (c.check && !flags.empty())
            detail::fail_check(inv, "n = " + std::to_string(ref.n) + ": " + joined);
    }
}

// ---------------------------------------------------------------------------

namespace detail {

inline void add_common(CLI::App* sub, CommonOptions& c, bool sampling)
{
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", c.out, "Output path (default: standard output)");
    sub->add_flag("--check", c.check, "Compare against reference values; exit 4 on mismatch");
    if (sampling) {
        sub->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--chunk", c.chunk, "Replications per random stream chunk")->check(CLI::PositiveNumber);
        sub->add_option("--seed", c.seed, "Seed (unsigned 64-bit)");
    }
}

inline void add_grid(CLI::App* sub, GridOptions& g)
{
    sub->add_option("--t", g.t, "t value(s)");
    sub->add_option("--t-grid", g.t_grid, "Linear grid start:stop:count");
    sub->add_option("--t-log-grid", g.t_log_grid, "Geometric grid start:stop:count");
}

} // namespace detail

/// Runs the command line; writes the report to `out` (or --out) and diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Carousel travel-time distributions: simulation, exact and limiting laws"};
    app.require_subcommand(1);
    app.set_version_flag("--version", report::kToolVersion);

    CommonOptions common;
    SimulateOptions sim_o;
    ExactOptions exact_o;
    LimitOptions limit_o;
    AsymOptions asym_o;
    Table1Options table_o;

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo travel times under a picking strategy");
    simulate->add_option("--n", sim_o.n, "Number of items")->required();
    simulate->add_option("--strategy", sim_o.strategy, "optimal | mstep:<m> | nearest | split");
    simulate->add_option("--reps", sim_o.reps, "Replications (>= 1000)");
    simulate->add_flag("--turn-pmf", sim_o.turn_pmf, "Report the distribution of the turn count");
    detail::add_common(simulate, common, true);

    auto* exact_cmd = app.add_subcommand("exact", "Exact P(T_n >= 1 - t) by quadrature");
    exact_cmd->add_option("--n", exact_o.n, "Number of items")->required();
    detail::add_grid(exact_cmd, exact_o.grid);
    exact_cmd->add_option("--tol", exact_o.tol, "Absolute quadrature tolerance");
    exact_cmd->add_flag("--mc-check", exact_o.mc_check, "Add a Monte Carlo column");
    exact_cmd->add_option("--reps", exact_o.reps, "Replications for --mc-check");
    detail::add_common(exact_cmd, common, true);

    auto* limit_cmd = app.add_subcommand("limit", "Limiting law of (n+1)(1 - T_n)");
    detail::add_grid(limit_cmd, limit_o.grid);
    limit_cmd->add_flag("--cdf", limit_o.cdf, "P(t) on the t grid");
    limit_cmd->add_flag("--max-cdf", limit_o.max_cdf, "[P(t)]^2 on the t grid");
    limit_cmd->add_flag("--extended", limit_o.extended, "Use extended precision (needed below t = 0.2)");
    limit_cmd->add_option("--digits", limit_o.digits, "Precision cap in decimal digits for --extended");
    limit_cmd->add_flag("--mean", limit_o.mean, "Limiting mean by series and quadrature");
    limit_cmd->add_option("--moments", limit_o.moments, "Limiting moments of orders 1..K");
    limit_cmd->add_option("--cumulants", limit_o.cumulants, "Cumulants of J of orders 1..V");
    limit_cmd->add_option("--approx-n", limit_o.approx_n, "Mean approximation 1 - c/(n+1)");
    detail::add_common(limit_cmd, common, false);

    auto* asym_cmd = app.add_subcommand("asym", "Small-t asymptotics");
    detail::add_grid(asym_cmd, asym_o.grid);
    asym_cmd->add_option("--functional", asym_o.functional, "J | qI | Jq");
    asym_cmd->add_option("--q", asym_o.q, "q for qI and Jq");
    asym_cmd->add_flag("--compare", asym_o.compare, "Add the extended-precision value of P(t) and the ratio");
    asym_cmd->add_flag("--constants", asym_o.constants, "A, B, C and theta3 on a theta grid");
    asym_cmd->add_flag("--residuals", asym_o.residuals, "Expansion residuals along lambda = 2^(k + 0.3)");
    detail::add_common(asym_cmd, common, false);

    auto* table = app.add_subcommand("table1", "Mean travel time table for n in {3, 5, 10, 15, 20, 30}");
    table->add_option("--reps", table_o.reps, "Replications per n");
    detail::add_common(table, common, true);

    std::vector<std::string> storage{"carousel"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage)
        argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << report::kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadArgs;
    }

    Invocation inv;
    for (std::size_t i = 1; i < storage.size(); ++i)
        inv.command_line += (i > 1 ? " " : "") + storage[i];

    try {
        if (simulate->parsed())
            cmd_simulate(sim_o, common, inv, err);
        else if (exact_cmd->parsed())
            cmd_exact(exact_o, common, inv, err);
        else if (limit_cmd->parsed())
            cmd_limit(limit_o, common, inv);
        else if (asym_cmd->parsed())
            cmd_asym(asym_o, common, inv);
        else
            cmd_table1(table_o, common, inv, err);
    } catch (const bad_arguments& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadArgs;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadArgs;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }

    const auto format = report::parse_format(common.format);
    if (common.out.empty()) {
        inv.report.write(out, format);
    } else {
        std::ofstream file(common.out, std::ios::binary);
        if (!file) {
            err << "error: cannot open " << common.out << '\n';
            return kExitBadArgs;
        }
        inv.report.write(file, format);
    }
    for (const auto& m : inv.messages)
        err << m << '\n';
    if (inv.numerical_failure)
        return kExitNumerical;
    return inv.check_failed ? kExitCheckFailed : kExitOk;
}

} // namespace carousel::cli
