// Acceptance suite: one PASS/FAIL line per criterion.
//
//   hypbridge_acceptance            run criteria 1-12
//   hypbridge_acceptance 5 7 12     run a subset
//
// Exit status is 0 iff every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <string>

#include "hypbridge/estimators.hpp"
#include "hypbridge/experiments.hpp"
#include "hypbridge/kernels.hpp"
#include "hypbridge/rng.hpp"
#include "hypbridge/report.hpp"
#include "json.hpp"

namespace ex = hypbridge::experiments;
namespace est = hypbridge::estimators;
namespace kn = hypbridge::kernels;
namespace sde = hypbridge::sde;
using hypbridge::report::fmt;
using hypbridge::report::ReportBundle;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kRateTol = 0.15;           // 1: relative error of the CIR slope
constexpr double kLaplaceZ = 3.0;           // 3: standard errors
constexpr double kGradTol = 0.05;           // 5: |(t/rho) grad log p - 1| at rho = 40
constexpr double kDescentSpread = 1e-4;     // 6: relative spread of the descent ratio
constexpr double kLaplacianFdTol = 1e-4;    // 7: closed form vs finite differences
constexpr double kBridgeTol = 0.25;         // 8: relative error of the bridge slopes
constexpr double kTailR2 = 0.9;             // 9
constexpr double kUnbiasedZ = 3.0;          // 11: IS vs naive, joint standard errors
constexpr double kHalvingZ = 2.0;           // 11: step halving, joint standard errors
constexpr double kGoldenRel = 1e-8;         // 12

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass;
  std::string detail;
};

ex::ExperimentConfig config(const std::string& name, json params = json::object()) {
  ex::ExperimentConfig c;
  c.experiment = name;
  c.params = std::move(params);
  c.seed = kSeed;
  return c;
}

std::string row_value(const ReportBundle& b, const std::string& name) {
  const auto& r = b.row(name);
  return name + " = " + fmt(r.value);
}

std::string failed_rows(const ReportBundle& b) {
  std::string out;
  for (const auto& r : b.summary)
    if (!r.pass) out += (out.empty() ? "failed: " : ", ") + r.name + " = " + fmt(r.value);
  return out;
}

// Criteria 1 and 2 share one run: alpha = 0 uses the same streams as cir-rate.
const ReportBundle& perturbed_run() {
  static const ReportBundle b = [] {
    auto c = config("cir-rate-perturbed", {{"nus", {8, 16, 24, 32, 40}},
                                           {"a", 0.25},
                                           {"c", 1.0},
                                           {"k", 1.0},
                                           {"t", 1.0},
                                           {"alpha_inner", 0.1},
                                           {"alpha_outer", 0.2}});
    c.n_paths = 200000;
    c.h = 2e-4;
    return ex::run(c);
  }();
  return b;
}

Outcome c1_cir_rate() {
  const auto& b = perturbed_run();
  const double K = kn::kcal(0.25, 1.0);
  const double slope = b.row("slope[alpha=0]").value;
  const double rel = std::abs(slope + K) / K;
  return {rel <= kRateTol, "slope " + fmt(slope) + " vs -K = " + fmt(-K) + ", relative error " + fmt(rel) +
                               " (tolerance " + fmt(kRateTol) + ")"};
}

Outcome c2_perturbed() {
  const auto& b = perturbed_run();
  const bool ok = b.row("bracket").pass && b.row("approach_plus").pass && b.row("approach_minus").pass;
  std::string d;
  for (const char* a : {"-0.2", "-0.1", "0", "0.1", "0.2"})
    d += std::string(d.empty() ? "" : ", ") + "slope(" + a + ") = " + fmt(b.row(std::string("slope[alpha=") + a + "]").value);
  return {ok, d + "; bracket " + (b.row("bracket").pass ? "yes" : "no") + ", approach " +
                  (b.row("approach_plus").pass && b.row("approach_minus").pass ? "yes" : "no")};
}

Outcome c3_laplace() {
  auto c = config("laplace-check", {{"nu", 5.0},
                                    {"q", 1.0},
                                    {"lambdas", {0.5, 1.0, 2.0}},
                                    {"sqrt_x", 0.25},
                                    {"sqrt_a", 1.0},
                                    {"z_max", kLaplaceZ}});
  c.n_paths = 100000;
  c.h = 1e-4;
  const auto b = ex::run(c);
  return {b.pass(), row_value(b, "z[lambda=0.5]") + ", " + row_value(b, "z[lambda=1]") + ", " +
                        row_value(b, "z[lambda=2]") + " (limit " + fmt(kLaplaceZ) + ")"};
}

Outcome c4_timechange() {
  auto c = config("timechange-ks", {{"k", 2.0}, {"a", 1.0}, {"nu", 3.0}, {"T", 1.0}});
  c.n_paths = 10000;
  const auto b = ex::run(c);
  return {b.pass(), row_value(b, "ks_statistic") + " vs 1% critical " + fmt(b.row("ks_critical_1pct").value)};
}

Outcome c5_gradlog() {
  const auto b = ex::run(config("gradlog-limit", {{"ds", {2, 3}},
                                                  {"ts", {0.25, 0.7}},
                                                  {"rhos", {30, 40, 60}},
                                                  {"rho_check", 40.0},
                                                  {"tolerance", kGradTol}}));
  double worst = 0.0;
  for (const auto& r : b.summary)
    if (r.name.find("rho=40]") != std::string::npos) worst = std::max(worst, r.value);
  return {b.pass(), "max deviation at rho = 40: " + fmt(worst) + "; decreasing from 30 to 60: " +
                        (b.pass() ? "yes" : failed_rows(b))};
}

Outcome c6_descent() {
  const auto b = ex::run(config("kernel-descent", {{"ds", {1, 2, 3}},
                                                   {"ts", {0.25, 1.0}},
                                                   {"rho_min", 1.0},
                                                   {"rho_max", 10.0},
                                                   {"spread_max", kDescentSpread}}));
  double worst = 0.0;
  for (const auto& r : b.summary) worst = std::max(worst, r.value);
  return {b.pass(), "max relative spread " + fmt(worst) + " (limit " + fmt(kDescentSpread) + ")"};
}

Outcome c7_laplacian() {
  const auto b = ex::run(config("laplacian-bounds", {{"ds", {2, 3, 5}},
                                                     {"n_points", 10000},
                                                     {"fd_points", 100},
                                                     {"fd_tolerance", kLaplacianFdTol}}));
  std::string d;
  for (int dim : {2, 3, 5}) {
    const std::string s = "[d=" + std::to_string(dim) + "]";
    d += (d.empty() ? "" : "; ") + std::string("d=") + std::to_string(dim) + ": min(Df - 2) " +
         fmt(b.row("lower_slack" + s).value) + ", max(Df - d - g) " + fmt(b.row("upper_excess" + s).value) +
         ", fd error " + fmt(b.row("fd_relative_error" + s).value);
  }
  return {b.pass(), d};
}

Outcome c8_bridge() {
  auto c = config("bridge-concentration", {{"d", 2}, {"c", 1.0}, {"a", 0.25}, {"ss", {2, 4, 6, 8}}, {"tolerance", kBridgeTol}});
  c.n_paths = 200000;
  c.h = 5e-4;
  const auto b = ex::run(c);
  const double K = kn::kcal(0.25, 1.0);
  return {b.pass(), "line slope " + fmt(b.row("slope_line").value) + ", segment slope " +
                        fmt(b.row("slope_segment").value) + " vs -K = " + fmt(-K) + " (tolerance " + fmt(kBridgeTol) +
                        "); segment >= line pathwise: " + (b.row("segment_dominates_line").pass ? "yes" : "no")};
}

Outcome c9_tail() {
  auto c = config("bridge-tail", {{"d", 2}, {"s", 4.0}, {"r2_min", kTailR2}});
  c.n_paths = 10000;
  const auto b = ex::run(c);
  return {b.pass(), row_value(b, "r2") + ", " + row_value(b, "slope")};
}

Outcome c10_bidisk() {
  auto c = config("bidisk-counterexample", {{"ss", {2, 4, 8}}, {"a", 0.5}});
  c.n_paths = 4000;
  const auto b = ex::run(c);
  const bool ok = b.row("ci_contains_zero").pass;
  return {ok, "slope 95% CI [" + fmt(b.row("slope_lower95").value) + ", " + fmt(b.row("slope_upper95").value) + "]; " +
                  row_value(b, "p[s=2]") + ", " + row_value(b, "p[s=8]")};
}

Outcome c11_unbiased() {
  const double a = 1.0, t = 1.0;
  const std::size_t n = 40000;
  const double hs[] = {5e-4, 2.5e-4};
  est::HitOptions opts{sde::CrossingRule::bridge, sde::CirScheme::root_reflected, 0};
  bool ok = true;
  double worst_is = 0.0, worst_half = 0.0;
  std::uint64_t stream = 0;
  for (double nu : {1.0, 2.0, 3.0, 4.0, 6.0}) {
    const sde::CirSpec spec{nu, 0.0, 1.0, 1.0, 0.0};
    est::EstimateCI naive[2], is[2];
    for (int j = 0; j < 2; ++j) {
      naive[j] = est::hit_prob(spec, a, t, n, hs[j], hypbridge::rng::derive_seed(kSeed, stream++), est::Method::naive, opts);
      is[j] = est::hit_prob(spec, a, t, n, hs[j], hypbridge::rng::derive_seed(kSeed, stream++), est::Method::girsanov, opts);
      const double z = std::abs(naive[j].mean - is[j].mean) / std::hypot(naive[j].se, is[j].se);
      worst_is = std::max(worst_is, z);
      ok = ok && z <= kUnbiasedZ;
    }
    for (const auto* pair : {naive, is}) {
      const double z = std::abs(pair[0].mean - pair[1].mean) / std::hypot(pair[0].se, pair[1].se);
      worst_half = std::max(worst_half, z);
      ok = ok && z < kHalvingZ;
    }
    std::printf("       nu=%g: naive %.5f +- %.5f, girsanov %.5f +- %.5f (h = %g)\n", nu, naive[1].mean, naive[1].se,
                is[1].mean, is[1].se, hs[1]);
  }
  return {ok, "max IS-vs-naive z " + fmt(worst_is) + " (limit " + fmt(kUnbiasedZ) + "), max step-halving z " +
                  fmt(worst_half) + " (limit " + fmt(kHalvingZ) + ")"};
}

Outcome c12_golden() {
  std::ifstream in(HYPBRIDGE_FIXTURES);
  const json g = json::parse(in);
  double worst = 0.0;
  std::size_t count = 0;
  auto check = [&](const json& e, double got) {
    const double want = std::stod(e.at("value").get<std::string>());
    const double rel = want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
    worst = std::max(worst, rel);
    ++count;
  };
  for (const auto& e : g["kcal"]) check(e, kn::kcal(e["a"], e["c"]));
  for (const auto& e : g["hyp2f1"]) check(e, kn::hyp2f1(e["a"], e["b"], e["c"], e["z"]));
  for (const auto& e : g["sqbessel_density"]) check(e, kn::sqbessel_density(e["k"], e["x"]));
  for (const auto& e : g["h_odd"]) check(e, kn::h_odd(e["d"].get<int>(), e["t"], e["rho"]));
  return {worst <= kGoldenRel, fmt(count) + " values, max relative error " + fmt(worst) + " (limit " + fmt(kGoldenRel) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"CIR first-passage rate", c1_cir_rate},
      {"perturbed rate bracketing", c2_perturbed},
      {"Laplace transform closed form", c3_laplace},
      {"time-change identity", c4_timechange},
      {"grad log kernel limit", c5_gradlog},
      {"descent consistency", c6_descent},
      {"Laplacian bounds", c7_laplacian},
      {"bridge concentration", c8_bridge},
      {"bridge sub-Gaussian tail", c9_tail},
      {"bidisk counterexample", c10_bidisk},
      {"Girsanov vs naive", c11_unbiased},
      {"special-function golden values", c12_golden},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (int i = 0; i < 12; ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failures, selected.empty() ? std::size_t{12} : selected.size());
  return failures == 0 ? 0 : 1;
}
