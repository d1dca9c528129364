// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "carousel/carousel.hpp"
#include "carousel/cli.hpp"

using namespace carousel;

namespace {

constexpr std::size_t kMillion = 1000000;

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what)
    {
        if (!ok)
            pass = false;
        notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
    }
    void info(const std::string& what) { notes.push_back("  info " + what); }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<double> linspace(double a, double b, int count)
{
    std::vector<double> v;
    for (int i = 0; i < count; ++i)
        v.push_back(a + (b - a) * i / (count - 1));
    return v;
}

std::vector<double> theta_grid()
{
    std::vector<double> g;
    for (int i = 0; i < 20; ++i)
        g.push_back(0.05 * i);
    return g;
}

// ---------------------------------------------------------------------------

Verdict table_deterministic_rows()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_cli({"table1", "--reps", "1000", "--seed", "1", "--format", "json"});
    const double elapsed = seconds_since(t0);
    v.require(r.code == cli::kExitOk, "table1 exits 0");
    if (r.code != cli::kExitOk)
        return v;
    const auto doc = nlohmann::json::parse(r.out);
    for (const auto& row : doc["rows"]) {
        const auto n = row["n"].get<std::size_t>();
        const auto* ref = cli::find_reference(n);
        const double upper = row["upper_estimate"].get<double>();
        const double approx = row["approximation"].get<double>();
        v.require(std::abs(upper - ref->upper) <= cli::kPrintedSlack &&
                      std::abs(approx - ref->approx) <= cli::kPrintedSlack,
                  fmt("n = %.0f: upper %.6f (printed %.4f), approximation %.6f", double(n), upper, ref->upper,
                      approx) +
                      fmt(" (printed %.4f)", ref->approx));
    }
    v.require(elapsed < 1.0, fmt("runtime %.3f s < 1 s", elapsed));
    return v;
}

Verdict table_monte_carlo_rows()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_cli({"table1", "--reps", std::to_string(kMillion), "--seed", "20240601", "--format", "json"});
    const double elapsed = seconds_since(t0);
    v.require(r.code == cli::kExitOk, "table1 exits 0");
    if (r.code != cli::kExitOk)
        return v;
    const auto doc = nlohmann::json::parse(r.out);
    for (const auto& row : doc["rows"]) {
        const auto n = row["n"].get<std::size_t>();
        const auto* ref = cli::find_reference(n);
        const double mean = row["mc_mean"].get<double>();
        const double se = row["mc_std_error"].get<double>();
        const double gap = std::abs(mean - ref->mean);
        v.require(gap <= 3.0 * se + cli::kPrintedSlack,
                  fmt("n = %.0f: E(T_n) = %.6f +- %.6f, printed %.4f", double(n), mean, se, ref->mean));
    }
    v.require(elapsed < 120.0, fmt("runtime %.1f s < 120 s", elapsed));
    return v;
}

Verdict limiting_mean()
{
    Verdict v;
    const double series = limit::limit_max_moment(1).value;
    const double quad = limit::limit_max_moment_by_quadrature(1).value;
    v.require(std::abs(series - 2.1578) <= 5e-4, fmt("series mean %.12f within 5e-4 of 2.1578", series));
    v.require(std::abs(series - quad) <= 1e-6, fmt("quadrature %.12f, gap %.2e <= 1e-6", quad, std::abs(series - quad)));
    return v;
}

Verdict exact_vs_closed_forms()
{
    Verdict v;
    for (std::size_t n = 1; n <= 3; ++n) {
        double worst = 0.0;
        for (double t : linspace(0.5, 1.0, 100))
            worst = std::max(worst, std::abs(exact::tn_cdf(n, t).value - exact::tn_cdf_closed_form(n, t)));
        v.require(worst <= 1e-6, fmt("n = %.0f: max gap %.2e <= 1e-6", double(n), worst));
    }
    return v;
}

Verdict pm_cross_formula()
{
    Verdict v;
    const exact::PmRecursion rec(8);
    for (int m = 1; m <= 8; ++m) {
        double worst = 0.0;
        for (double t : linspace(0.0, 1.0, 200))
            worst = std::max(worst, std::abs(rec.evaluate(m, t).value - exact::pm_closed_form(m, t)));
        v.require(worst <= 1e-8, fmt("m = %.0f: max gap %.2e <= 1e-8", double(m), worst));
    }
    return v;
}

Verdict integral_equation()
{
    Verdict v;
    double worst = 0.0, where = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = 0.05 * std::pow(200.0, i / 200.0);
        const double r = limit::integral_equation_residual(t);
        if (r > worst) {
            worst = r;
            where = t;
        }
    }
    v.require(worst < 1e-10, fmt("max residual %.2e at t = %.3f over 201 points of [0.05, 10]", worst, where));
    return v;
}

Verdict hard_bound()
{
    Verdict v;
    for (std::size_t n = 1; n <= 10; ++n) {
        const double bound = 1.0 - alpha(n + 1);
        bool ok = true;
        double largest = 0.0;
        try {
            // Sampled directly so the library's own bound assertion is not what is being tested.
            const auto times = sim::sample_values(kMillion, 700 + n, {}, [n](Xoshiro256& rng) {
                return optimal_travel_time(sim::sample_instance(n, rng)).travel_time;
            });
            largest = *std::max_element(times.begin(), times.end());
            ok = largest <= bound;
        } catch (const std::exception&) {
            ok = false;
        }
        const double tight = optimal_travel_time(tightness_instance(n)).travel_time;
        v.require(ok && std::abs(tight - bound) <= 1e-12,
                  fmt("n = %.0f: max T = %.9f <= 1 - alpha = %.9f, tight instance gap %.1e", double(n), largest,
                      bound, std::abs(tight - bound)));
    }
    return v;
}

Verdict oracle_equivalence()
{
    Verdict v;
    for (std::size_t n = 1; n <= 8; ++n) {
        Xoshiro256 rng(derive_seed(800, n));
        double worst = 0.0;
        for (int i = 0; i < 100000; ++i) {
            const auto inst = sim::sample_instance(n, rng);
            worst = std::max(worst, std::abs(optimal_travel_time(inst).travel_time - brute_force_route_oracle(inst)));
        }
        v.require(worst <= 1e-12, fmt("n = %.0f: max gap %.1e over 1e5 instances", double(n), worst));
    }
    return v;
}

Verdict turn_count_law()
{
    Verdict v;
    const double r = static_cast<double>(kMillion);
    for (std::size_t m : {2u, 3u}) {
        const auto pmf = sim::estimate_turn_count_pmf(10, sim::Strategy::mstep(m), kMillion, 900 + m);
        for (const auto& f : pmf) {
            if (f.k > m)
                continue;
            const double p = sim::mstep_turn_probability(f.k, m);
            const double sigma = std::sqrt(p * (1.0 - p) / r);
            v.require(std::abs(f.frequency - p) <= 3.0 * sigma,
                      fmt("m = %.0f, k = %.0f: %.6f vs %.6f", double(m), double(f.k), f.frequency, p) +
                          fmt(" (%.1f sigma)", std::abs(f.frequency - p) / sigma));
        }
    }
    for (std::size_t n : {10u, 30u}) {
        const auto pmf = sim::estimate_turn_count_pmf(n, sim::Strategy::optimal(), kMillion, 950 + n);
        bool ok = true;
        double tail = 1.0, worst_margin = -1.0;
        for (const auto& f : pmf) {
            tail -= f.frequency;
            const double bound = std::ldexp(1.0, -static_cast<int>(f.k));
            const double sigma = std::sqrt(std::max(tail * (1.0 - tail), 0.0) / r);
            ok = ok && tail < bound + 3.0 * sigma + 1e-12;
            worst_margin = std::max(worst_margin, tail / bound);
        }
        v.require(ok, fmt("optimal, n = %.0f: P(K > k) < 2^-k + 3 sigma for all k (max ratio to 2^-k: %.3f)",
                          double(n), worst_margin));
    }
    return v;
}

Verdict exponential_identity()
{
    Verdict v;
    for (std::size_t m : {1u, 3u}) {
        for (double q : {0.3, 0.5, 0.8}) {
            const auto c = sim::check_lemma11_identity(m, q, kMillion, derive_seed(1100 + m, static_cast<std::uint64_t>(q * 10)));
            v.require(c.ks_distance < c.critical_value, fmt("m = %.0f, q = %.1f: KS %.5f < %.5f", double(m), q,
                                                            c.ks_distance, c.critical_value));
        }
    }
    return v;
}

Verdict theta_constancy()
{
    Verdict v;
    double lo = 1e300, hi = -1e300, worst_theta = 0.0;
    for (double theta : theta_grid()) {
        const double th = asym::theta_fn({0.5, theta});
        const double c = asym::c_term(theta) * th;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        worst_theta = std::max(worst_theta, std::abs(th - 1.0));
    }
    v.require(hi - lo <= 1e-10, fmt("C(theta) theta3(theta) spread %.2e <= 1e-10", hi - lo));
    v.require(std::abs(lo - 0.01013) <= 1e-5, fmt("value %.15f within 1e-5 of 0.01013", lo));
    v.require(worst_theta < 1e-12, fmt("max |theta3 - 1| = %.2e < 1e-12", worst_theta));
    return v;
}

Verdict product_identity()
{
    Verdict v;
    double worst = 0.0;
    for (double theta : theta_grid())
        worst = std::max(worst, asym::check_prop51(theta).rel_gap);
    v.require(worst < 1e-10, fmt("max relative gap %.2e < 1e-10", worst));
    return v;
}

Verdict asymptotic_correctness()
{
    Verdict v;
    std::vector<double> ratios;
    for (double t : {0.15, 0.10, 0.07, 0.05}) {
        const double r = asym::asymptotic_cdf_J(t) / limit::limit_cdf_extended(t).value;
        ratios.push_back(r);
        v.info(fmt("t = %.2f: asymptotic / exact = %.6f", t, r));
    }
    bool toward_one = true;
    for (std::size_t i = 1; i < ratios.size(); ++i)
        toward_one = toward_one && std::abs(ratios[i] - 1.0) < std::abs(ratios[i - 1] - 1.0);
    v.require(toward_one, "ratio moves monotonically toward 1 as t decreases");
    v.require(ratios.back() >= 0.5 && ratios.back() <= 2.0, fmt("ratio at t = 0.05 is %.4f, inside [0.5, 2]", ratios.back()));

    double worst[3] = {0.0, 0.0, 0.0};
    auto prev = asym::expansion_residuals(std::ldexp(std::exp2(0.3), 10));
    for (int k = 11; k <= 30; ++k) {
        const auto cur = asym::expansion_residuals(std::ldexp(std::exp2(0.3), k));
        worst[0] = std::max(worst[0], std::abs(cur.mean / prev.mean));
        worst[1] = std::max(worst[1], std::abs(cur.log_phi / prev.log_phi));
        worst[2] = std::max(worst[2], std::abs(cur.variance / prev.variance));
        prev = cur;
    }
    v.require(worst[0] < 0.75 && worst[1] < 0.75 && worst[2] < 0.75,
              fmt("largest residual ratio per doubling: mean %.3f, log phi %.3f, variance %.3f (< 0.75)", worst[0],
                  worst[1], worst[2]));
    return v;
}

Verdict limit_law_convergence()
{
    Verdict v;
    const double opt = sim::check_convergence_to_limit(30, kMillion, 1401);
    v.require(opt < 0.01, fmt("optimal, n = 30: sup |F_n - P^2| = %.4f < 0.01", opt));
    const double ni = sim::check_nearest_convergence(30, kMillion, 1402);
    v.require(ni < 0.01, fmt("nearest item, n = 30: KS to I^(1/2) = %.4f < 0.01", ni));
    v.info(fmt("Monte Carlo noise level: two-sample 1%% critical value %.4f",
               sim::ks_critical_two_sample(kMillion, kMillion)));
    v.info(fmt("optimal, n = 100: %.4f; nearest item, n = 100: %.4f",
               sim::check_convergence_to_limit(100, kMillion, 1403), sim::check_nearest_convergence(100, kMillion, 1404)));
    return v;
}

Verdict determinism()
{
    Verdict v;
    const std::vector<std::vector<std::string>> commands{
        {"simulate", "--n", "10", "--reps", "200000", "--seed", "42", "--workers", "2", "--check"},
        {"simulate", "--n", "10", "--strategy", "mstep:3", "--turn-pmf", "--reps", "200000", "--seed", "7",
         "--workers", "3", "--check"},
        {"exact", "--n", "5", "--t", "0.5", "--t", "0.8", "--mc-check", "--reps", "100000", "--seed", "5", "--check"},
        {"table1", "--reps", "20000", "--seed", "11", "--workers", "2", "--check"},
    };
    for (const auto& args : commands) {
        const auto a = run_cli(args);
        const auto b = run_cli(args);
        std::string line;
        for (const auto& s : args)
            line += " " + s;
        v.require(a.out == b.out && a.code == b.code && !a.out.empty(),
                  "byte-identical CSV:" + line + fmt(" (exit %.0f, %.0f bytes)", a.code, double(a.out.size())));
    }
    return v;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"reference table: deterministic rows", table_deterministic_rows},
        {"reference table: Monte Carlo rows", table_monte_carlo_rows},
        {"limiting mean", limiting_mean},
        {"exact CDF vs closed forms (n <= 3)", exact_vs_closed_forms},
        {"P_m closed form vs recursion", pm_cross_formula},
        {"integral equation for P", integral_equation},
        {"hard bound and tightness", hard_bound},
        {"gain scan vs brute-force routes", oracle_equivalence},
        {"turn-count laws", turn_count_law},
        {"exponential max identity", exponential_identity},
        {"theta constancy", theta_constancy},
        {"product identity on theta grid", product_identity},
        {"small-t asymptotics", asymptotic_correctness},
        {"limit-law convergence", limit_law_convergence},
        {"determinism of --check runs", determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        std::printf("%s %2zu  %s  (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    seconds_since(t0));
        for (const auto& n : v.notes)
            std::printf("%s\n", n.c_str());
        std::fflush(stdout);
        if (!v.pass)
            ++failures;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
