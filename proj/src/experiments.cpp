#include "hypbridge/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "hypbridge/errors.hpp"
#include "hypbridge/estimators.hpp"
#include "hypbridge/hypgeo.hpp"
#include "hypbridge/kernels.hpp"
#include "hypbridge/parallel.hpp"
#include "hypbridge/rng.hpp"
#include "hypbridge/sde.hpp"

namespace hypbridge::experiments {

using nlohmann::json;
using report::banded;
using report::check;
using report::fmt;
using report::info;
using report::ReportBundle;
using report::Table;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Parameter schema

enum class Kind { number, integer, numbers, choice };

struct ParamSpec {
  std::string name;
  Kind kind;
  json def;
  double lo = -kInf;
  double hi = kInf;
  bool lo_open = false;
  std::vector<std::string> choices = {};
  std::size_t min_items = 1;
};

ParamSpec number(std::string name, double def, double lo = -kInf, double hi = kInf, bool lo_open = false) {
  return {std::move(name), Kind::number, def, lo, hi, lo_open};
}
ParamSpec positive(std::string name, double def) { return number(std::move(name), def, 0.0, kInf, true); }
ParamSpec integer(std::string name, int def, double lo = -kInf, double hi = kInf) {
  return {std::move(name), Kind::integer, def, lo, hi};
}
ParamSpec numbers(std::string name, std::vector<double> def, double lo, bool lo_open, std::size_t min_items) {
  return {std::move(name), Kind::numbers, def, lo, kInf, lo_open, {}, min_items};
}
ParamSpec choice(std::string name, std::string def, std::vector<std::string> choices) {
  return {std::move(name), Kind::choice, def, -kInf, kInf, false, std::move(choices)};
}

std::string describe_range(const ParamSpec& p) {
  std::ostringstream os;
  if (p.lo > -kInf) os << (p.lo_open ? "> " : ">= ") << p.lo;
  if (p.hi < kInf) os << (p.lo > -kInf ? " and " : "") << "<= " << p.hi;
  return os.str();
}

bool in_range(const ParamSpec& p, double v) {
  if (!std::isfinite(v)) return false;
  if (p.lo_open ? !(v > p.lo) : !(v >= p.lo)) return false;
  return v <= p.hi;
}

void check_param(const ParamSpec& p, const json& v, std::vector<std::string>& out) {
  const std::string where = "parameter '" + p.name + "'";
  switch (p.kind) {
    case Kind::number:
      if (!v.is_number()) {
        out.push_back(where + " must be a number");
      } else if (!in_range(p, v.get<double>())) {
        out.push_back(where + " must be " + describe_range(p));
      }
      break;
    case Kind::integer:
      if (!v.is_number_integer()) {
        out.push_back(where + " must be an integer");
      } else if (!in_range(p, v.get<double>())) {
        out.push_back(where + " must be " + describe_range(p));
      }
      break;
    case Kind::numbers:
      if (!v.is_array() || v.size() < p.min_items ||
          !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
        out.push_back(where + " must be a list of at least " + std::to_string(p.min_items) + " numbers");
      } else if (!std::all_of(v.begin(), v.end(), [&](const json& e) { return in_range(p, e.get<double>()); })) {
        out.push_back(where + " entries must be " + describe_range(p));
      }
      break;
    case Kind::choice: {
      std::string all;
      for (const auto& c : p.choices) all += (all.empty() ? "" : ", ") + c;
      if (!v.is_string() || std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end())
        out.push_back(where + " must be one of: " + all);
      break;
    }
  }
}

class Params {
 public:
  explicit Params(json j) : j_(std::move(j)) {}
  double num(const std::string& k) const { return j_.at(k).get<double>(); }
  int integer(const std::string& k) const { return j_.at(k).get<int>(); }
  std::vector<double> nums(const std::string& k) const { return j_.at(k).get<std::vector<double>>(); }
  std::vector<int> ints(const std::string& k) const {
    std::vector<int> out;
    for (double v : nums(k)) out.push_back(static_cast<int>(v));
    return out;
  }
  std::string str(const std::string& k) const { return j_.at(k).get<std::string>(); }
  const json& raw() const { return j_; }

 private:
  json j_;
};

struct Context {
  Params p;
  std::uint64_t seed;
  std::size_t n;
  double h;
  int threads;
};

using Runner = std::function<ReportBundle(const Context&)>;
using CrossCheck = std::function<void(const Params&, std::size_t, double, std::vector<std::string>&)>;

struct Experiment {
  ExperimentInfo info;
  std::vector<ParamSpec> params;
  std::size_t min_paths;
  CrossCheck cross;
  Runner runner;
};

// ---------------------------------------------------------------------------
// Helpers shared by the experiments

std::string tag(const std::string& name, const std::vector<std::pair<std::string, double>>& keys) {
  std::string out = name + "[";
  for (std::size_t i = 0; i < keys.size(); ++i) out += (i ? "," : "") + keys[i].first + "=" + fmt(keys[i].second);
  return out + "]";
}

std::vector<int> integer_list(const json& v) {
  std::vector<int> out;
  for (const auto& e : v) out.push_back(static_cast<int>(e.get<double>()));
  return out;
}

bool is_integer_list(const json& v) {
  return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) {
           return e.is_number() && std::floor(e.get<double>()) == e.get<double>();
         });
}

estimators::Method parse_method(const std::string& s) {
  if (s == "naive") return estimators::Method::naive;
  if (s == "girsanov") return estimators::Method::girsanov;
  return estimators::Method::girsanov_mixture;
}

sde::CrossingRule parse_rule(const std::string& s) {
  return s == "bridge" ? sde::CrossingRule::bridge : sde::CrossingRule::grid;
}

sde::CirScheme parse_scheme(const std::string& s) {
  return s == "root-reflected" ? sde::CirScheme::root_reflected : sde::CirScheme::full_truncation;
}

void add_plot_line(report::Plot& plot, std::string label, std::vector<double> x, std::vector<double> y,
                   bool line = true) {
  plot.series.push_back({std::move(label), std::move(x), std::move(y), line});
}

// One hitting-probability series over nu for fixed (alpha, a, c, k, t).
struct RateSeries {
  std::vector<double> nus;
  std::vector<estimators::EstimateCI> est;
  std::optional<estimators::RateFit> fit;
  std::string fit_error;
};

RateSeries rate_series(const Context& ctx, double alpha, std::uint64_t stream_base) {
  const Params& p = ctx.p;
  RateSeries out;
  out.nus = p.nums("nus");
  estimators::HitOptions opts;
  opts.rule = parse_rule(p.str("rule"));
  opts.scheme = parse_scheme(p.str("scheme"));
  opts.threads = ctx.threads;
  const auto method = parse_method(p.str("method"));
  std::vector<std::pair<double, estimators::EstimateCI>> pts;
  for (std::size_t i = 0; i < out.nus.size(); ++i) {
    const sde::CirSpec spec{out.nus[i], alpha, p.num("c"), p.num("k"), 0.0};
    const auto e = estimators::hit_prob(spec, p.num("a"), p.num("t"), ctx.n, ctx.h,
                                        rng::derive_seed(ctx.seed, stream_base + i), method, opts);
    out.est.push_back(e);
    if (e.mean > 0.0 && e.se > 0.0) pts.emplace_back(out.nus[i], e);
  }
  if (pts.size() >= 3) {
    out.fit = estimators::rate_fit(pts);
  } else {
    out.fit_error = "fewer than three positive estimates";
  }
  return out;
}

void rate_table_rows(Table& t, double alpha, const RateSeries& s) {
  for (std::size_t i = 0; i < s.nus.size(); ++i) {
    const auto& e = s.est[i];
    t.add({fmt(alpha), fmt(s.nus[i]), fmt(e.mean), fmt(e.se), fmt(e.hits), fmt(e.n),
           e.mean > 0.0 ? fmt(std::log(e.mean)) : "", e.zero_hits ? "1" : "0"});
  }
}

// ---------------------------------------------------------------------------
// cir-rate, cir-rate-perturbed

const char* kRateAnchor = "exponential hitting rate of the square-root diffusion as nu grows";
const char* kPerturbedAnchor = "rate bracketing for the alpha-perturbed square-root diffusion";

std::vector<ParamSpec> rate_params() {
  return {numbers("nus", {8, 16, 24, 32, 40}, 0.0, true, 3),
          positive("a", 0.25),
          positive("c", 1.0),
          positive("k", 1.0),
          positive("t", 1.0),
          choice("method", "girsanov-mixture", {"naive", "girsanov", "girsanov-mixture"}),
          choice("rule", "bridge", {"grid", "bridge"}),
          choice("scheme", "root-reflected", {"full-truncation", "root-reflected"})};
}

void rate_cross(const Params& p, double alpha_max, std::vector<std::string>& out) {
  const std::string m = p.str("method");
  if (m == "girsanov" && p.num("k") < 1.0) out.push_back("method girsanov requires k >= 1");
  if (m == "girsanov" && alpha_max != 0.0 && p.num("k") != 1.0)
    out.push_back("method girsanov with alpha != 0 requires k = 1");
  if (m == "girsanov-mixture" && p.str("scheme") != "root-reflected")
    out.push_back("method girsanov-mixture requires scheme root-reflected");
}

ReportBundle run_cir_rate(const Context& ctx) {
  const Params& p = ctx.p;
  const double alpha = p.num("alpha");
  const double K = kernels::kcal(p.num("a"), p.num("c"));
  const double tol = p.num("tolerance");
  const RateSeries s = rate_series(ctx, alpha, 0);
  ReportBundle b;
  Table t{"cir_rate.csv", {"alpha", "nu", "mean", "se", "hits", "n", "log_mean", "zero_hits"}, {}};
  rate_table_rows(t, alpha, s);
  b.tables.push_back(t);
  b.summary.push_back(info("rate_constant", kRateAnchor, K, "K = (2/c) log cosh(c sqrt a)"));
  for (std::size_t i = 0; i < s.nus.size(); ++i)
    b.summary.push_back(info(tag("hit_prob", {{"nu", s.nus[i]}}), kRateAnchor, s.est[i].mean,
                             "se " + fmt(s.est[i].se) + (s.est[i].zero_hits ? ", zero hits" : "")));
  if (!s.fit) {
    b.summary.push_back(banded("slope", kRateAnchor, std::nan(""), -K * (1 + tol), -K * (1 - tol), s.fit_error));
    return b;
  }
  const auto& f = *s.fit;
  if (alpha == 0.0) {
    auto row = banded("slope", kRateAnchor, f.slope, -K * (1 + tol), -K * (1 - tol),
                      "weighted log-linear fit, target -K within " + fmt(tol) + " relative");
    row.target = -K;
    b.summary.push_back(row);
  } else {
    b.summary.push_back(info("slope", kPerturbedAnchor, f.slope, "alpha != 0: no single-number target"));
  }
  b.summary.push_back(info("slope_stderr", kRateAnchor, f.slope_stderr));
  b.summary.push_back(info("intercept", kRateAnchor, f.intercept));
  b.summary.push_back(info("r2", kRateAnchor, f.r2));
  b.summary.push_back(info("relative_error", kRateAnchor, std::abs(f.slope + K) / K));

  report::Plot plot{"cir_rate.svg", "log P[T_a < t] against nu", "nu", "log P", {}};
  std::vector<double> lp, fitted, ref;
  for (std::size_t i = 0; i < s.nus.size(); ++i) {
    lp.push_back(s.est[i].mean > 0 ? std::log(s.est[i].mean) : std::nan(""));
    fitted.push_back(f.intercept + f.slope * s.nus[i]);
    ref.push_back(f.intercept - K * s.nus[i]);
  }
  add_plot_line(plot, "estimate", s.nus, lp, false);
  add_plot_line(plot, "fit", s.nus, fitted);
  add_plot_line(plot, "slope -K", s.nus, ref);
  b.plots.push_back(plot);
  return b;
}

ReportBundle run_cir_rate_perturbed(const Context& ctx) {
  const Params& p = ctx.p;
  const double K = kernels::kcal(p.num("a"), p.num("c"));
  const double ai = p.num("alpha_inner");
  const double ao = p.num("alpha_outer");
  const std::vector<double> alphas = {-ao, -ai, 0.0, ai, ao};
  ReportBundle b;
  Table t{"cir_rate_perturbed.csv", {"alpha", "nu", "mean", "se", "hits", "n", "log_mean", "zero_hits"}, {}};
  Table ts{"cir_rate_slopes.csv", {"alpha", "slope", "slope_stderr", "intercept", "r2"}, {}};
  std::map<double, double> slope;
  bool ok = true;
  for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
    const double al = alphas[ia];
    // alpha = 0 uses the same streams as cir-rate
    const RateSeries s = rate_series(ctx, al, al == 0.0 ? 0 : 1000 * (ia + 1));
    rate_table_rows(t, al, s);
    if (!s.fit) {
      ok = false;
      b.summary.push_back(banded(tag("slope", {{"alpha", al}}), kPerturbedAnchor, std::nan(""), {}, {}, s.fit_error));
      continue;
    }
    slope[al] = s.fit->slope;
    ts.add({fmt(al), fmt(s.fit->slope), fmt(s.fit->slope_stderr), fmt(s.fit->intercept), fmt(s.fit->r2)});
    b.summary.push_back(info(tag("slope", {{"alpha", al}}), kPerturbedAnchor, s.fit->slope,
                             "stderr " + fmt(s.fit->slope_stderr)));
  }
  b.tables.push_back(t);
  b.tables.push_back(ts);
  b.summary.push_back(info("rate_constant", kRateAnchor, K));
  if (!ok) return b;
  const double lo = std::min(slope[-ai], slope[ai]);
  const double hi = std::max(slope[-ai], slope[ai]);
  b.summary.push_back(check("bracket", kPerturbedAnchor, lo <= slope[0.0] && slope[0.0] <= hi,
                            "slopes at -alpha_inner and +alpha_inner bracket the alpha = 0 slope"));
  auto dist = [&](double al) { return std::abs(slope[al] + K); };
  b.summary.push_back(check("approach_plus", kPerturbedAnchor, dist(ai) < dist(ao),
                            "|slope(+inner) + K| = " + fmt(dist(ai)) + " < |slope(+outer) + K| = " + fmt(dist(ao))));
  b.summary.push_back(check("approach_minus", kPerturbedAnchor, dist(-ai) < dist(-ao),
                            "|slope(-inner) + K| = " + fmt(dist(-ai)) + " < |slope(-outer) + K| = " +
                                fmt(dist(-ao))));
  report::Plot plot{"cir_rate_perturbed.svg", "fitted slope against alpha", "alpha", "slope", {}};
  std::vector<double> xs, ys;
  for (auto [al, sl] : slope) xs.push_back(al), ys.push_back(sl);
  add_plot_line(plot, "fitted slope", xs, ys, false);
  add_plot_line(plot, "-K", {xs.front(), xs.back()}, {-K, -K});
  b.plots.push_back(plot);
  return b;
}

// ---------------------------------------------------------------------------
// laplace-check

const char* kLaplaceAnchor = "first-passage Laplace transform in closed form via Gauss 2F1";

ReportBundle run_laplace_check(const Context& ctx) {
  const Params& p = ctx.p;
  const double nu = p.num("nu"), q = p.num("q");
  const double x = p.num("sqrt_x") * p.num("sqrt_x");
  const double a = p.num("sqrt_a") * p.num("sqrt_a");
  const auto lambdas = p.nums("lambdas");
  const double zmax = p.num("z_max");
  estimators::HitOptions opts;
  opts.rule = parse_rule(p.str("rule"));
  opts.threads = ctx.threads;
  const auto mc = estimators::mc_laplace_multi(nu, q, lambdas, x, a, ctx.n, ctx.h, ctx.seed, p.num("cutoff"), opts);
  ReportBundle b;
  Table t{"laplace_check.csv", {"lambda", "closed_form", "mc_mean", "mc_se", "bias_bound", "z"}, {}};
  double prev = kInf;
  bool monotone = true;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double cf = kernels::laplace_fpt({nu, q, lambdas[i], x, a});
    monotone = monotone && cf < prev;
    prev = cf;
    const double excess = std::max(0.0, std::abs(mc[i].mean - cf) - mc[i].bias_bound);
    const double z = excess / mc[i].se;
    t.add({fmt(lambdas[i]), fmt(cf), fmt(mc[i].mean), fmt(mc[i].se), fmt(mc[i].bias_bound), fmt(z)});
    auto row = banded(tag("z", {{"lambda", lambdas[i]}}), kLaplaceAnchor, z, 0.0, zmax,
                      "MC " + fmt(mc[i].mean) + " vs closed form " + fmt(cf));
    row.target = 0.0;
    b.summary.push_back(row);
    b.summary.push_back(info(tag("closed_form", {{"lambda", lambdas[i]}}), kLaplaceAnchor, cf));
  }
  b.summary.push_back(check("closed_form_decreasing", kLaplaceAnchor, monotone, "decreasing in lambda"));
  b.tables.push_back(t);
  return b;
}

// ---------------------------------------------------------------------------
// timechange-ks

const char* kTimeChangeAnchor = "time-change representation of the linear-drift CIR process";

ReportBundle run_timechange_ks(const Context& ctx) {
  const Params& p = ctx.p;
  const double k = p.num("k"), a = p.num("a"), nu = p.num("nu"), T = p.num("T");
  std::vector<double> tc(ctx.n), eu(ctx.n);
  const std::uint64_t s1 = rng::derive_seed(ctx.seed, 1), s2 = rng::derive_seed(ctx.seed, 2);
  parallel::parallel_for(
      ctx.n,
      [&](std::size_t i) {
        tc[i] = sde::cir_via_timechange(k, a, nu, T, ctx.h, s1, i).values.back();
        eu[i] = sde::simulate_linear_cir(k, a, nu, T, ctx.h, s2, i).values.back();
      },
      ctx.threads);
  const auto ks = estimators::ks_two_sample(tc, eu);
  ReportBundle b;
  auto row = banded("ks_statistic", kTimeChangeAnchor, ks.statistic, 0.0, ks.critical_1pct,
                    "two-sample KS at the 1% level, n = m = " + fmt(ctx.n));
  b.summary.push_back(row);
  b.summary.push_back(info("ks_critical_1pct", kTimeChangeAnchor, ks.critical_1pct));
  const sde::TimeChangeSpec spec{k, a, nu};
  b.summary.push_back(info("psi_limit", kTimeChangeAnchor, spec.psi_limit(), "1/(2 c_nu)"));
  std::sort(tc.begin(), tc.end());
  std::sort(eu.begin(), eu.end());
  Table t{"timechange_quantiles.csv", {"level", "timechange", "euler"}, {}};
  for (int lv = 1; lv <= 99; ++lv) {
    const auto idx = static_cast<std::size_t>(std::floor(lv / 100.0 * static_cast<double>(ctx.n - 1)));
    t.add({fmt(lv / 100.0), fmt(tc[idx]), fmt(eu[idx])});
  }
  b.tables.push_back(t);
  return b;
}

// ---------------------------------------------------------------------------
// kernel-descent, gradlog-limit, envelope-fit

const char* kDescentAnchor = "descent recursion between heat kernels of dimension d and d + 2";
const char* kGradAnchor = "grad log heat kernel is asymptotic to rho / t";
const char* kEnvelopeAnchor = "two-sided Gaussian envelope of the heat kernel";

double dlog_heat(int d, double t, double rho, double step) {
  auto f = [&](double r) { return kernels::log_heat_h(d, t, r); };
  return (-f(rho + 2 * step) + 8 * f(rho + step) - 8 * f(rho - step) + f(rho - 2 * step)) / (12 * step);
}

ReportBundle run_kernel_descent(const Context& ctx) {
  const Params& p = ctx.p;
  const int n_rho = p.integer("n_rho");
  const double r0 = p.num("rho_min"), r1 = p.num("rho_max");
  const double step = p.num("fd_step");
  ReportBundle b;
  Table t{"kernel_descent.csv", {"d", "t", "rho", "ratio"}, {}};
  for (int d : integer_list(p.raw().at("ds"))) {
    for (double tt : p.nums("ts")) {
      std::vector<double> ratios;
      for (int i = 0; i < n_rho; ++i) {
        const double rho = r0 + (r1 - r0) * i / (n_rho - 1);
        const double lh = kernels::log_heat_h(d, tt, rho);
        const double lh2 = kernels::log_heat_h(d + 2, tt, rho);
        const double ratio = -dlog_heat(d, tt, rho, step) / std::sinh(rho) * std::exp(lh - lh2);
        ratios.push_back(ratio);
        t.add({std::to_string(d), fmt(tt), fmt(rho), fmt(ratio)});
      }
      const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
      const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
      const double spread = (*mx - *mn) / std::abs(mean);
      b.summary.push_back(banded(tag("spread", {{"d", d}, {"t", tt}}), kDescentAnchor, spread, 0.0,
                                 p.num("spread_max"), "relative spread of the descent ratio, mean " + fmt(mean)));
    }
  }
  b.tables.push_back(t);
  return b;
}

ReportBundle run_gradlog_limit(const Context& ctx) {
  const Params& p = ctx.p;
  const double c = p.num("c");
  const double tol = p.num("tolerance");
  const double rho_check = p.num("rho_check");
  auto rhos = p.nums("rhos");
  std::sort(rhos.begin(), rhos.end());
  ReportBundle b;
  Table t{"gradlog_limit.csv", {"d", "t", "rho", "grad_log_heat", "scaled", "deviation"}, {}};
  report::Plot plot{"gradlog_limit.svg", "|(t/rho) grad log p - 1|", "rho", "log10 deviation", {}};
  for (int d : integer_list(p.raw().at("ds"))) {
    for (double tt : p.nums("ts")) {
      std::vector<double> dev, ldev;
      for (double rho : rhos) {
        const double g = kernels::grad_log_heat(d, c, tt, rho);
        const double scaled = tt / rho * g;
        dev.push_back(std::abs(scaled - 1.0));
        ldev.push_back(std::log10(dev.back()));
        t.add({std::to_string(d), fmt(tt), fmt(rho), fmt(g), fmt(scaled), fmt(dev.back())});
        if (rho == rho_check)
          b.summary.push_back(banded(tag("deviation", {{"d", d}, {"t", tt}, {"rho", rho}}), kGradAnchor,
                                     dev.back(), 0.0, tol));
        else
          b.summary.push_back(info(tag("deviation", {{"d", d}, {"t", tt}, {"rho", rho}}), kGradAnchor, dev.back()));
      }
      bool decreasing = true;
      for (std::size_t i = 1; i < dev.size(); ++i) decreasing = decreasing && dev[i] < dev[i - 1];
      b.summary.push_back(check(tag("decreasing", {{"d", d}, {"t", tt}}), kGradAnchor, decreasing,
                                "deviation strictly decreasing along the rho grid"));
      add_plot_line(plot, "d=" + std::to_string(d) + " t=" + fmt(tt), rhos, ldev);
    }
  }
  b.tables.push_back(t);
  b.plots.push_back(plot);
  return b;
}

ReportBundle run_envelope_fit(const Context& ctx) {
  const Params& p = ctx.p;
  const int d = p.integer("d");
  const auto fit = kernels::fit_envelope(d, p.nums("ts"), p.nums("rhos"));
  ReportBundle b;
  b.summary.push_back(info("K", kEnvelopeAnchor, fit.params.K));
  b.summary.push_back(info("k1", kEnvelopeAnchor, fit.params.k1));
  b.summary.push_back(info("k2", kEnvelopeAnchor, fit.params.k2));
  b.summary.push_back(check("constants_valid", kEnvelopeAnchor,
                            fit.params.K > 1.0 && fit.params.k2 >= fit.params.k1 && fit.params.k1 > 0.0,
                            "K > 1 and k2 >= k1 > 0"));
  b.summary.push_back(banded("oscillation", kEnvelopeAnchor, fit.oscillation, 0.0, p.num("oscillation_max"),
                             "range of the log residual at k = " + fmt(fit.k_mid)));
  b.summary.push_back(check("sandwich", kEnvelopeAnchor, fit.sandwich_holds, "lower <= p <= upper at every node"));
  Table t{"envelope_fit.csv", {"t", "rho", "log_p", "log_lower", "log_upper"}, {}};
  for (double tt : fit.ts) {
    const double lz = std::log(kernels::heat_normalizer(d, tt));
    for (double rho : fit.rhos) {
      t.add({fmt(tt), fmt(rho), fmt(kernels::log_heat_h(d, tt, rho) - lz),
             fmt(kernels::log_dm_envelope(kernels::EnvelopeSide::lower, fit.params, tt, rho)),
             fmt(kernels::log_dm_envelope(kernels::EnvelopeSide::upper, fit.params, tt, rho))});
    }
  }
  b.tables.push_back(t);
  return b;
}

// ---------------------------------------------------------------------------
// laplacian-bounds

const char* kLaplacianAnchor = "Laplacian of the squared distance to a geodesic is bounded by 2 and d + g";

// Laplace-Beltrami operator of f = g^2 in half-space coordinates (curvature -1),
// z_d^2 sum_i f_ii - (d - 2) z_d f_d, by fourth-order central differences.
double fd_laplacian(const hypgeo::HPoint<double>& z, const hypgeo::GeodesicSpec<double>& geo, double rel_step) {
  const int d = z.dim();
  const double zd = z.height();
  const double hstep = rel_step * zd;
  auto f = [&](const hypgeo::Vector<double>& w) {
    const double g = hypgeo::dist_to_geodesic(hypgeo::HPoint<double>(w), geo).g;
    return g * g;
  };
  const double f0 = f(z.coords());
  double lap = 0.0, fd = 0.0;
  for (int i = 0; i < d; ++i) {
    auto at = [&](double m) {
      hypgeo::Vector<double> w = z.coords();
      w[i] += m * hstep;
      return f(w);
    };
    const double fp1 = at(1), fm1 = at(-1), fp2 = at(2), fm2 = at(-2);
    lap += (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * hstep * hstep);
    if (i == d - 1) fd = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * hstep);
  }
  return zd * zd * lap - (d - 2) * zd * fd;
}

hypgeo::HPoint<double> random_point(int d, rng::PathRng& rng, double box, double log_height) {
  hypgeo::Vector<double> w(d);
  for (int i = 0; i + 1 < d; ++i) w[i] = box * (2.0 * rng.uniform() - 1.0);
  w[d - 1] = std::exp(log_height * (2.0 * rng.uniform() - 1.0));
  return hypgeo::HPoint<double>(w);
}

ReportBundle run_laplacian_bounds(const Context& ctx) {
  const Params& p = ctx.p;
  const int n_points = p.integer("n_points");
  const int n_fd = p.integer("fd_points");
  const double box = p.num("box"), lh = p.num("log_height");
  ReportBundle b;
  Table t{"laplacian_fd.csv", {"d", "index", "g", "closed_form", "finite_difference", "relative_error"}, {}};
  Table tb{"laplacian_bounds.csv", {"d", "points", "min_lower_slack", "max_upper_excess", "upper_violations"}, {}};
  int di = 0;
  for (int d : integer_list(p.raw().at("ds"))) {
    const auto geo = hypgeo::GeodesicSpec<double>::axis(d);
    double min_lower = kInf, max_upper = -kInf;
    std::size_t upper_bad = 0;
    for (int i = 0; i < n_points; ++i) {
      rng::PathRng rng(rng::derive_seed(ctx.seed, 100 + di), static_cast<std::uint64_t>(i));
      const auto z = random_point(d, rng, box, lh);
      const double g = hypgeo::dist_to_geodesic(z, geo).g;
      const double lap = hypgeo::laplacian_f(z, geo);
      min_lower = std::min(min_lower, lap - 2.0);
      max_upper = std::max(max_upper, lap - (d + g));
      if (lap > d + g) ++upper_bad;
    }
    double max_rel = 0.0;
    for (int i = 0; i < n_fd; ++i) {
      rng::PathRng rng(rng::derive_seed(ctx.seed, 200 + di), static_cast<std::uint64_t>(i));
      const auto z = random_point(d, rng, box, lh);
      const double lap = hypgeo::laplacian_f(z, geo);
      const double fdv = fd_laplacian(z, geo, p.num("fd_step"));
      const double rel = std::abs(fdv - lap) / std::abs(lap);
      max_rel = std::max(max_rel, rel);
      t.add({std::to_string(d), std::to_string(i), fmt(hypgeo::dist_to_geodesic(z, geo).g), fmt(lap), fmt(fdv),
             fmt(rel)});
    }
    tb.add({std::to_string(d), std::to_string(n_points), fmt(min_lower), fmt(max_upper), fmt(upper_bad)});
    b.summary.push_back(banded(tag("lower_slack", {{"d", d}}), kLaplacianAnchor, min_lower, 0.0, {},
                               "min over points of Delta f - 2"));
    b.summary.push_back(banded(tag("upper_excess", {{"d", d}}), kLaplacianAnchor, max_upper, {}, 0.0,
                               "max over points of Delta f - (d + g); " + fmt(upper_bad) + " of " +
                                   std::to_string(n_points) + " points exceed the bound"));
    b.summary.push_back(banded(tag("fd_relative_error", {{"d", d}}), kLaplacianAnchor, max_rel, 0.0,
                               p.num("fd_tolerance"), "closed form vs metric finite differences"));
    ++di;
  }
  b.tables.push_back(tb);
  b.tables.push_back(t);
  return b;
}

// ---------------------------------------------------------------------------
// bridge-concentration, bridge-tail

const char* kBridgeAnchor = "exponential concentration of the Brownian bridge around its geodesic";
const char* kTailAnchor = "sub-Gaussian tail of the bridge deviation from the constant-speed geodesic";

sde::BridgeSpec bridge_spec(const Params& p, double s, double h) {
  const int d = p.integer("d");
  sde::BridgeSpec spec;
  spec.x = sde::Point::on_axis(d);
  spec.v = hypgeo::unit_vector<double>(d, d - 1);
  spec.s = s;
  spec.c = p.num("c");
  spec.step = h;
  spec.end_cut = p.num("end_cut");
  return spec;
}

void bridge_cross(const Params& p, std::size_t, double, std::vector<std::string>& out) {
  const int d = p.integer("d");
  if (d != 2 && d != 3) out.push_back("bridge experiments support d in {2, 3}, got d = " + std::to_string(d));
}

ReportBundle run_bridge_concentration(const Context& ctx) {
  const Params& p = ctx.p;
  const double a = p.num("a");
  const double K = kernels::kcal(a, p.num("c"));
  const double tol = p.num("tolerance");
  const auto ss = p.nums("ss");
  ReportBundle b;
  Table t{"bridge_concentration.csv",
          {"s", "p_line", "se_line", "hits_line", "p_segment", "se_segment", "hits_segment", "n", "pinned_fraction"},
          {}};
  std::vector<std::pair<double, estimators::EstimateCI>> line_pts, seg_pts;
  std::size_t pathwise_bad = 0;
  for (std::size_t is = 0; is < ss.size(); ++is) {
    const sde::BridgeSimulator sim(bridge_spec(p, ss[is], ctx.h));
    const double pin = 5.0 * std::sqrt(sim.spec().end_cut);
    std::vector<double> hl(ctx.n), hs(ctx.n), pinned(ctx.n);
    std::vector<char> bad(ctx.n, 0);
    const std::uint64_t seed = rng::derive_seed(ctx.seed, is);
    parallel::parallel_for(
        ctx.n,
        [&](std::size_t i) {
          const auto st = sim.stats(seed, i);
          hl[i] = st.sup_f_line >= a ? 1.0 : 0.0;
          hs[i] = st.sup_f_segment >= a ? 1.0 : 0.0;
          pinned[i] = st.end_dist < pin ? 1.0 : 0.0;
          bad[i] = st.sup_f_segment < st.sup_f_line - 1e-12;
        },
        ctx.threads);
    pathwise_bad += static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
    const auto el = estimators::proportion(hl);
    const auto es = estimators::proportion(hs);
    const double pin_frac = std::accumulate(pinned.begin(), pinned.end(), 0.0) / ctx.n;
    t.add({fmt(ss[is]), fmt(el.mean), fmt(el.se), fmt(el.hits), fmt(es.mean), fmt(es.se), fmt(es.hits), fmt(ctx.n),
           fmt(pin_frac)});
    b.summary.push_back(info(tag("p_line", {{"s", ss[is]}}), kBridgeAnchor, el.mean, "se " + fmt(el.se)));
    b.summary.push_back(info(tag("p_segment", {{"s", ss[is]}}), kBridgeAnchor, es.mean, "se " + fmt(es.se)));
    b.summary.push_back(info(tag("pinned_fraction", {{"s", ss[is]}}), kBridgeAnchor, pin_frac,
                             "fraction with rho(X_{1-eps}, y) < 5 sqrt(eps)"));
    if (el.mean > 0.0) line_pts.emplace_back(ss[is], el);
    if (es.mean > 0.0) seg_pts.emplace_back(ss[is], es);
  }
  b.summary.push_back(check("segment_dominates_line", kBridgeAnchor, pathwise_bad == 0,
                            fmt(pathwise_bad) + " paths with segment sup below line sup"));
  report::Plot plot{"bridge_concentration.svg", "log P[sup Z >= a] against s", "s", "log P", {}};
  auto fit_row = [&](const char* name, const std::vector<std::pair<double, estimators::EstimateCI>>& pts,
                     const char* label) {
    if (pts.size() < 3) {
      b.summary.push_back(banded(name, kBridgeAnchor, std::nan(""), -K * (1 + tol), -K * (1 - tol),
                                 "fewer than three positive estimates"));
      return;
    }
    const auto f = estimators::rate_fit(pts);
    auto row = banded(name, kBridgeAnchor, f.slope, -K * (1 + tol), -K * (1 - tol),
                      "stderr " + fmt(f.slope_stderr) + ", r2 " + fmt(f.r2));
    row.target = -K;
    b.summary.push_back(row);
    std::vector<double> xs, ys;
    for (const auto& [s, e] : pts) xs.push_back(s), ys.push_back(std::log(e.mean));
    add_plot_line(plot, label, xs, ys, false);
  };
  fit_row("slope_line", line_pts, "line");
  fit_row("slope_segment", seg_pts, "segment");
  b.summary.push_back(info("rate_constant", kBridgeAnchor, K));
  if (!line_pts.empty()) {
    const double x0 = line_pts.front().first;
    const double y0 = std::log(line_pts.front().second.mean);
    add_plot_line(plot, "slope -K", {x0, ss.back()}, {y0, y0 - K * (ss.back() - x0)});
  }
  b.tables.push_back(t);
  b.plots.push_back(plot);
  return b;
}

ReportBundle run_bridge_tail(const Context& ctx) {
  const Params& p = ctx.p;
  const sde::BridgeSimulator sim(bridge_spec(p, p.num("s"), ctx.h));
  std::vector<double> sups(ctx.n);
  parallel::parallel_for(
      ctx.n, [&](std::size_t i) { sups[i] = sim.stats(ctx.seed, i).sup_dist_gamma; }, ctx.threads);
  const auto fit = estimators::subgaussian_tail_fit(sups);
  ReportBundle b;
  b.summary.push_back(banded("r2", kTailAnchor, fit.r2, p.num("r2_min"), 1.0,
                             "log P[sup >= u] against u^2 over the 50-99% quantiles"));
  b.summary.push_back(banded("slope", kTailAnchor, fit.slope, {}, 0.0, "must be negative"));
  b.summary.back().pass = fit.slope < 0.0;
  b.summary.push_back(info("c_hat", kTailAnchor, fit.c_hat));
  b.summary.push_back(info("K_hat", kTailAnchor, fit.K_hat));
  b.summary.push_back(info("residual", kTailAnchor, fit.residual));
  std::sort(sups.begin(), sups.end());
  Table t{"bridge_tail.csv", {"level", "u", "tail_prob"}, {}};
  report::Plot plot{"bridge_tail.svg", "log P[sup >= u] against u^2", "u^2", "log tail", {}};
  std::vector<double> xs, ys;
  for (int lv = 50; lv <= 99; ++lv) {
    const auto idx = static_cast<std::size_t>(std::floor(lv / 100.0 * static_cast<double>(ctx.n - 1)));
    const double u = sups[idx];
    const auto first = std::lower_bound(sups.begin(), sups.end(), u);
    const double tail = static_cast<double>(sups.end() - first) / static_cast<double>(ctx.n);
    t.add({fmt(lv / 100.0), fmt(u), fmt(tail)});
    xs.push_back(u * u);
    ys.push_back(std::log(tail));
  }
  add_plot_line(plot, "empirical", xs, ys, false);
  b.tables.push_back(t);
  b.plots.push_back(plot);
  return b;
}

// ---------------------------------------------------------------------------
// bidisk-counterexample

const char* kBidiskAnchor = "no exponential concentration for bridges on the bidisk";

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

ReportBundle run_bidisk(const Context& ctx) {
  const Params& p = ctx.p;
  const double a = p.num("a");
  const auto ss = p.nums("ss");
  ReportBundle b;
  Table t{"bidisk.csv", {"s", "p", "se", "hits", "n", "all_hits", "mean_sup", "factor_correlation"}, {}};
  std::vector<std::pair<double, estimators::EstimateCI>> pts;
  const double corr_band = 3.0 / std::sqrt(static_cast<double>(ctx.n));
  for (std::size_t is = 0; is < ss.size(); ++is) {
    const sde::BidiskBridge bb(ss[is], ctx.h, p.num("end_cut"));
    std::vector<double> hit(ctx.n), sup(ctx.n), h1(ctx.n), h2(ctx.n);
    const std::uint64_t seed = rng::derive_seed(ctx.seed, is);
    parallel::parallel_for(
        ctx.n,
        [&](std::size_t i) {
          const auto st = bb.stats(seed, i);
          sup[i] = st.sup_dist;
          hit[i] = st.sup_dist > a ? 1.0 : 0.0;
          h1[i] = st.sup_h1;
          h2[i] = st.sup_h2;
        },
        ctx.threads);
    const auto e = estimators::proportion(hit);
    const double corr = correlation(h1, h2);
    const double mean_sup = std::accumulate(sup.begin(), sup.end(), 0.0) / ctx.n;
    t.add({fmt(ss[is]), fmt(e.mean), fmt(e.se), fmt(e.hits), fmt(e.n), e.all_hits ? "1" : "0", fmt(mean_sup),
           fmt(corr)});
    b.summary.push_back(info(tag("p", {{"s", ss[is]}}), kBidiskAnchor, e.mean,
                             "se " + fmt(e.se) + (e.all_hits ? ", every path exceeded a (rule-of-three se)" : "")));
    b.summary.push_back(banded(tag("factor_correlation", {{"s", ss[is]}}), kBidiskAnchor, corr, -corr_band,
                               corr_band, "sup distances of the two factors to their axes, independent factors"));
    if (e.mean > 0.0) pts.emplace_back(ss[is], e);
  }
  b.tables.push_back(t);
  if (pts.size() < 3) {
    b.summary.push_back(check("ci_contains_zero", kBidiskAnchor, false, "fewer than three positive estimates"));
    return b;
  }
  const auto f = estimators::rate_fit(pts);
  b.summary.push_back(info("slope", kBidiskAnchor, f.slope, "stderr " + fmt(f.slope_stderr)));
  b.summary.push_back(info("slope_lower95", kBidiskAnchor, f.slope_lower95()));
  b.summary.push_back(info("slope_upper95", kBidiskAnchor, f.slope_upper95()));
  b.summary.push_back(check("ci_contains_zero", kBidiskAnchor, f.slope_lower95() <= 0.0 && 0.0 <= f.slope_upper95(),
                            "95% CI of the fitted slope contains 0"));
  return b;
}

// ---------------------------------------------------------------------------
// comparison-check

const char* kComparisonAnchor = "pathwise comparison of the radial process with reflected processes";

void comparison_cross(const Params& p, std::size_t, double, std::vector<std::string>& out) {
  const double a0 = p.num("alpha0");
  const double nu_p = p.num("nu") - p.num("q") / (a0 * std::tanh(a0));
  if (!(nu_p > 0.0)) out.push_back("comparison-check requires nu' = nu - q/(alpha0 tanh alpha0) > 0, got " + fmt(nu_p));
}

ReportBundle run_comparison(const Context& ctx) {
  const Params& p = ctx.p;
  const double nu = p.num("nu"), q = p.num("q"), a0 = p.num("alpha0"), T = p.num("T");
  std::vector<sde::ComparisonResult> res(ctx.n);
  parallel::parallel_for(
      ctx.n, [&](std::size_t i) { res[i] = sde::comparison_detail(nu, q, a0, T, ctx.h, ctx.seed, i); }, ctx.threads);
  ReportBundle b;
  Table t{"comparison.csv", {"path", "max_upper_excess", "max_lower_excess", "upper", "lower"}, {}};
  std::size_t up = 0, lo = 0;
  for (std::size_t i = 0; i < ctx.n; ++i) {
    up += res[i].upper;
    lo += res[i].lower;
    t.add({fmt(i), fmt(res[i].max_upper_excess), fmt(res[i].max_lower_excess), res[i].upper ? "1" : "0",
           res[i].lower ? "1" : "0"});
  }
  const double n = static_cast<double>(ctx.n);
  const double fmin = p.num("min_fraction");
  b.summary.push_back(banded("upper_fraction", kComparisonAnchor, up / n, fmin, 1.0,
                             "X^{nu,q} <= X^{nu',0} + alpha0 on the grid, tolerance 2 sqrt(h)"));
  b.summary.push_back(banded("lower_fraction", kComparisonAnchor, lo / n, fmin, 1.0,
                             "X^{nu,0} <= X^{nu,q} on the grid, tolerance 2 sqrt(h)"));
  b.summary.push_back(info("nu_prime", kComparisonAnchor, nu - q / (a0 * std::tanh(a0))));
  b.tables.push_back(t);
  return b;
}

// ---------------------------------------------------------------------------
// Registry

void no_cross(const Params&, std::size_t, double, std::vector<std::string>&) {}

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    {
      auto ps = rate_params();
      ps.push_back(number("alpha", 0.0));
      ps.push_back(positive("tolerance", 0.15));
      v.push_back({{"cir-rate", kRateAnchor, "hitting probabilities over a nu grid and their log-linear slope",
                    200000, 2e-4},
                   ps, 1,
                   [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                     rate_cross(p, p.num("alpha"), out);
                   },
                   run_cir_rate});
    }
    {
      auto ps = rate_params();
      ps.push_back(positive("alpha_inner", 0.1));
      ps.push_back(positive("alpha_outer", 0.2));
      v.push_back({{"cir-rate-perturbed", kPerturbedAnchor,
                    "slopes at alpha in {-outer, -inner, 0, inner, outer} and their ordering", 200000, 2e-4},
                   ps, 1,
                   [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                     rate_cross(p, p.num("alpha_outer"), out);
                     if (!(p.num("alpha_inner") < p.num("alpha_outer")))
                       out.push_back("alpha_inner must be smaller than alpha_outer");
                   },
                   run_cir_rate_perturbed});
    }
    v.push_back({{"laplace-check", kLaplaceAnchor, "Monte Carlo E[exp(-lambda T)] against the 2F1 closed form",
                  100000, 1e-4},
                 {number("nu", 5.0, 0.0), number("q", 1.0, 0.5), numbers("lambdas", {0.5, 1.0, 2.0}, 0.0, true, 1),
                  positive("sqrt_x", 0.25), positive("sqrt_a", 1.0), positive("cutoff", 30.0),
                  choice("rule", "bridge", {"grid", "bridge"}), positive("z_max", 3.0)},
                 1,
                 [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                   if (!(p.num("sqrt_x") < p.num("sqrt_a"))) out.push_back("laplace-check requires sqrt_x < sqrt_a");
                 },
                 run_laplace_check});
    v.push_back({{"timechange-ks", kTimeChangeAnchor,
                  "two-sample KS of the time-change construction against direct Euler", 10000, 1e-3},
                 {positive("k", 2.0), number("a", 1.0, 0.0), number("nu", 3.0), positive("T", 1.0)},
                 100,
                 no_cross,
                 run_timechange_ks});
    v.push_back({{"kernel-descent", kDescentAnchor, "constancy in rho of the descent ratio", 0, 0.0},
                 {numbers("ds", {1, 2, 3}, 1.0, false, 1), numbers("ts", {0.25, 1.0}, 0.0, true, 1),
                  positive("rho_min", 1.0), positive("rho_max", 10.0), integer("n_rho", 19, 3),
                  positive("fd_step", 1e-3), positive("spread_max", 1e-4)},
                 0,
                 [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                   if (!is_integer_list(p.raw().at("ds"))) out.push_back("parameter 'ds' must hold integers");
                   if (!(p.num("rho_min") < p.num("rho_max"))) out.push_back("rho_min must be below rho_max");
                   if (p.num("rho_min") <= 2 * p.num("fd_step")) out.push_back("rho_min must exceed 2 fd_step");
                 },
                 run_kernel_descent});
    v.push_back({{"gradlog-limit", kGradAnchor, "(t/rho) grad log p against 1 on a rho grid", 0, 0.0},
                 {numbers("ds", {2, 3}, 1.0, false, 1), numbers("ts", {0.25, 0.7}, 0.0, true, 1),
                  numbers("rhos", {20, 30, 40, 60}, 0.0, true, 2), positive("c", 1.0), positive("tolerance", 0.05),
                  positive("rho_check", 40.0)},
                 0,
                 [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                   if (!is_integer_list(p.raw().at("ds"))) out.push_back("parameter 'ds' must hold integers");
                   for (double t : p.nums("ts"))
                     if (t > 1.0) out.push_back("gradlog-limit requires t <= 1");
                 },
                 run_gradlog_limit});
    v.push_back({{"laplacian-bounds", kLaplacianAnchor,
                  "2 <= Delta f <= d + g at random points and a finite-difference cross-check", 0, 0.0},
                 {numbers("ds", {2, 3, 5}, 2.0, false, 1), integer("n_points", 10000, 1), integer("fd_points", 100, 1),
                  positive("box", 3.0), positive("log_height", 2.0), positive("fd_step", 1e-3),
                  positive("fd_tolerance", 1e-4)},
                 0,
                 [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                   if (!is_integer_list(p.raw().at("ds"))) out.push_back("parameter 'ds' must hold integers");
                   for (int d : integer_list(p.raw().at("ds")))
                     if (d > hypgeo::kMaxDim) out.push_back("dimensions above " + std::to_string(hypgeo::kMaxDim) +
                                                            " are not supported");
                 },
                 run_laplacian_bounds});
    v.push_back({{"envelope-fit", kEnvelopeAnchor, "fitted K, k1, k2 and the sandwich check", 0, 0.0},
                 {integer("d", 3, 1, 7), numbers("ts", {0.25, 1.0}, 0.0, true, 1),
                  numbers("rhos", {1, 2, 5, 10, 20, 40}, 0.0, false, 2), positive("oscillation_max", 1.0)},
                 0,
                 [](const Params& p, std::size_t, double, std::vector<std::string>& out) {
                   for (double t : p.nums("ts"))
                     if (t > 1.0) out.push_back("envelope-fit requires t <= 1");
                 },
                 run_envelope_fit});
    v.push_back({{"bridge-concentration", kBridgeAnchor,
                  "P[sup f >= a] over s for line and segment, with the log-linear slope", 200000, 5e-4},
                 {integer("d", 2), positive("c", 1.0), positive("a", 0.25), numbers("ss", {2, 4, 6, 8}, 0.0, true, 3),
                  positive("tolerance", 0.25), number("end_cut", 1e-3, 0.0, 0.5, true)},
                 1,
                 bridge_cross,
                 run_bridge_concentration});
    v.push_back({{"bridge-tail", kTailAnchor, "log-tail regression of sup rho(X_t, gamma(t)) on u^2", 10000, 5e-4},
                 {integer("d", 2), positive("c", 1.0), number("s", 4.0, 0.0), positive("r2_min", 0.9),
                  number("end_cut", 1e-3, 0.0, 0.5, true)},
                 100,
                 bridge_cross,
                 run_bridge_tail});
    v.push_back({{"bidisk-counterexample", kBidiskAnchor,
                  "P[sup distance to the diagonal > a] over s on H^2 x H^2", 4000, 5e-4},
                 {numbers("ss", {2, 4, 8}, 0.0, false, 3), positive("a", 0.5), number("end_cut", 1e-3, 0.0, 0.5, true)},
                 1,
                 no_cross,
                 run_bidisk});
    v.push_back({{"comparison-check", kComparisonAnchor,
                  "shared-noise ordering against reflected comparison processes", 1000, 1e-3},
                 {number("nu", 10.0), number("q", 1.0, 0.0), positive("alpha0", 0.5), positive("T", 1.0),
                  number("min_fraction", 0.999, 0.0, 1.0)},
                 1,
                 comparison_cross,
                 run_comparison});
    return v;
  }();
  return all;
}

const Experiment* lookup(const std::string& name) {
  for (const auto& e : experiments())
    if (e.info.name == name) return &e;
  return nullptr;
}

json merged_params(const Experiment& e, const json& given) {
  json out = json::object();
  for (const auto& ps : e.params) out[ps.name] = given.contains(ps.name) ? given.at(ps.name) : ps.def;
  return out;
}

}  // namespace

const std::vector<ExperimentInfo>& registry() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> v;
    for (const auto& e : experiments()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ExperimentInfo* find_experiment(const std::string& name) {
  const Experiment* e = lookup(name);
  return e ? &e->info : nullptr;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {"experiment", "params", "seed", "n_paths", "h", "output_dir", "threads"};
  for (const auto& [k, _] : doc.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config field '" + k + "'");
  ExperimentConfig c;
  if (!doc.contains("experiment") || !doc.at("experiment").is_string())
    throw ConfigError("config field 'experiment' must be a string");
  c.experiment = doc.at("experiment").get<std::string>();
  if (doc.contains("params")) {
    if (!doc.at("params").is_object()) throw ConfigError("config field 'params' must be an object");
    c.params = doc.at("params");
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ConfigError("config field 'seed' must be a nonnegative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("n_paths")) {
    if (!doc.at("n_paths").is_number_unsigned()) throw ConfigError("config field 'n_paths' must be a positive integer");
    c.n_paths = doc.at("n_paths").get<std::size_t>();
  }
  if (doc.contains("h")) {
    if (!doc.at("h").is_number()) throw ConfigError("config field 'h' must be a number");
    c.h = doc.at("h").get<double>();
  }
  if (doc.contains("output_dir")) {
    if (!doc.at("output_dir").is_string()) throw ConfigError("config field 'output_dir' must be a string");
    c.output_dir = doc.at("output_dir").get<std::string>();
  }
  if (doc.contains("threads")) {
    if (!doc.at("threads").is_number_unsigned()) throw ConfigError("config field 'threads' must be a nonnegative integer");
    c.threads = doc.at("threads").get<int>();
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + file.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json j = {{"experiment", c.experiment}, {"params", c.params}, {"seed", c.seed}, {"output_dir", c.output_dir}};
  if (c.n_paths) j["n_paths"] = *c.n_paths;
  if (c.h) j["h"] = *c.h;
  if (c.threads) j["threads"] = c.threads;
  return j;
}

std::vector<std::string> validate(const ExperimentConfig& config) {
  std::vector<std::string> out;
  const Experiment* e = lookup(config.experiment);
  if (!e) {
    std::string names;
    for (const auto& x : experiments()) names += (names.empty() ? "" : ", ") + x.info.name;
    out.push_back("unknown experiment '" + config.experiment + "'; registered: " + names);
    return out;
  }
  for (const auto& [k, _] : config.params.items()) {
    const bool known = std::any_of(e->params.begin(), e->params.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (!known) out.push_back("unknown parameter '" + k + "' for experiment '" + e->info.name + "'");
  }
  const json merged = merged_params(*e, config.params);
  const std::size_t before = out.size();
  for (const auto& ps : e->params) check_param(ps, merged.at(ps.name), out);
  const std::size_t n = config.n_paths.value_or(e->info.default_paths);
  const double h = config.h.value_or(e->info.default_h);
  if (e->info.default_paths > 0 && n < e->min_paths)
    out.push_back("n_paths must be at least " + std::to_string(e->min_paths));
  if (e->info.default_h > 0.0 && !(h > 0.0 && h < 0.5)) out.push_back("h must lie in (0, 0.5)");
  if (config.threads < 0) out.push_back("threads must be nonnegative");
  if (out.size() == before) e->cross(Params(merged), n, h, out);
  return out;
}

ReportBundle run(const ExperimentConfig& config) {
  const auto diags = validate(config);
  if (!diags.empty()) {
    std::string msg = "invalid config:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw ConfigError(msg);
  }
  const Experiment& e = *lookup(config.experiment);
  const Context ctx{Params(merged_params(e, config.params)), config.seed,
                    config.n_paths.value_or(e.info.default_paths), config.h.value_or(e.info.default_h),
                    config.threads};
  const auto t0 = std::chrono::steady_clock::now();
  ReportBundle b = e.runner(ctx);
  b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  b.experiment = e.info.name;
  json echo = to_json(config);
  echo["params"] = ctx.p.raw();
  echo["n_paths"] = ctx.n;
  echo["h"] = ctx.h;
  b.config = echo;
  return b;
}

}  // namespace hypbridge::experiments
