#include "agrotelem/stats_anova.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "text_util.hpp"

namespace agrotelem::stats {

namespace {

constexpr double kBetaTolerance = 1e-15;
constexpr int kMaxIterations = 500;
constexpr double kTiny = 1e-300;

double mean_of(std::span<const double> v) {
  // Two-pass mean: the correction term removes most of the summation error.
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double corr = 0.0;
  for (double x : v) corr += x - m;
  return m + corr / n;
}

double sum_sq_dev(std::span<const double> v, double about) {
  double s = 0.0;
  for (double x : v) s += (x - about) * (x - about);
  return s;
}

// Continued fraction for I_x(a,b), modified Lentz. Converges fast for
// x < (a+1)/(a+b+2).
double beta_cf(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kBetaTolerance) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

AnovaTable finish(double ss_between, double ss_within, double ss_total, std::size_t k,
                  std::size_t n_total) {
  AnovaTable t;
  t.ss_between = ss_between;
  t.ss_within = ss_within;
  t.ss_total = ss_total;
  t.df_between = static_cast<int>(k) - 1;
  t.df_within = static_cast<int>(n_total - k);
  t.df_total = static_cast<int>(n_total) - 1;
  t.ms_between = ss_between / t.df_between;
  t.ms_within = ss_within / t.df_within;
  if (!(t.ms_within > 0.0)) {
    throw StatsError(StatsErrorKind::DegenerateWithin,
                     "within-group variance is zero; F is undefined");
  }
  t.f = t.ms_between / t.ms_within;
  t.p = f_sf(t.f, t.df_between, t.df_within);
  return t;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

DescriptiveStats describe(std::span<const double> values) {
  if (values.empty()) throw StatsError(StatsErrorKind::EmptyInput, "describe: no values");
  DescriptiveStats d;
  d.n = values.size();
  d.mean = mean_of(values);
  d.sd = d.n > 1 ? std::sqrt(sum_sq_dev(values, d.mean) / static_cast<double>(d.n - 1)) : 0.0;
  if (d.mean != 0.0) d.cv = 100.0 * d.sd / d.mean;

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = d.n / 2;
  d.median = d.n % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return d;
}

AnovaTable anova_from_raw(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw StatsError(StatsErrorKind::TooFewGroups, "need at least 2 groups");
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.size() < 2) {
      throw StatsError(StatsErrorKind::GroupTooSmall, "every group needs at least 2 scores");
    }
    for (double x : g) {
      if (!std::isfinite(x)) throw StatsError(StatsErrorKind::InvalidInput, "non-finite score");
    }
    all.insert(all.end(), g.begin(), g.end());
  }
  const double grand = mean_of(all);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    ss_within += sum_sq_dev(g, m);
  }
  return finish(ss_between, ss_within, sum_sq_dev(all, grand), groups.size(), all.size());
}

AnovaTable anova_from_summary(std::span<const GroupSummary> groups) {
  if (groups.size() < 2) throw StatsError(StatsErrorKind::TooFewGroups, "need at least 2 groups");
  std::size_t n_total = 0;
  double weighted = 0.0;
  for (const auto& g : groups) {
    if (g.n < 2) throw StatsError(StatsErrorKind::GroupTooSmall, "every group needs n >= 2");
    if (!std::isfinite(g.mean) || !std::isfinite(g.sd) || g.sd < 0.0) {
      throw StatsError(StatsErrorKind::InvalidInput, "group mean/sd must be finite, sd >= 0");
    }
    n_total += g.n;
    weighted += static_cast<double>(g.n) * g.mean;
  }
  const double grand = weighted / static_cast<double>(n_total);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    ss_between += static_cast<double>(g.n) * (g.mean - grand) * (g.mean - grand);
    ss_within += static_cast<double>(g.n - 1) * g.sd * g.sd;
  }
  return finish(ss_between, ss_within, ss_between + ss_within, groups.size(), n_total);
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || std::isnan(x)) {
    throw std::domain_error("incomplete_beta: need a > 0, b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
  return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double f_sf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw std::domain_error("f_sf: degrees of freedom must be > 0");
  if (std::isnan(f)) throw std::domain_error("f_sf: F is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(df2 / (df2 + df1 * f), df2 / 2.0, df1 / 2.0);
}

GroupSummary pooled_summary(std::span<const GroupSummary> groups) {
  GroupSummary total;
  double weighted = 0.0;
  for (const auto& g : groups) {
    total.n += g.n;
    weighted += static_cast<double>(g.n) * g.mean;
  }
  if (total.n == 0) throw StatsError(StatsErrorKind::EmptyInput, "no groups");
  total.mean = weighted / static_cast<double>(total.n);
  double ss = 0.0;
  for (const auto& g : groups) {
    ss += static_cast<double>(g.n - 1) * g.sd * g.sd +
          static_cast<double>(g.n) * (g.mean - total.mean) * (g.mean - total.mean);
  }
  total.sd = total.n > 1 ? std::sqrt(ss / static_cast<double>(total.n - 1)) : 0.0;
  return total;
}

std::string format_descriptive_table(std::span<const NamedStats> columns) {
  constexpr std::size_t kLabel = 30;
  constexpr std::size_t kCol = 14;
  std::string out = pad("Statistic", kLabel);
  for (const auto& c : columns) out += pad(c.name, kCol);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out += '\n';
  auto row = [&](const char* label, auto cell) {
    std::string line = pad(label, kLabel);
    for (const auto& c : columns) line += pad(cell(c), kCol);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  };
  row("Participants", [](const NamedStats& c) { return std::to_string(c.stats.n); });
  row("Mean", [](const NamedStats& c) { return fmt("%.2f", c.stats.mean); });
  row("Standard deviation", [](const NamedStats& c) { return fmt("%.2f", c.stats.sd); });
  row("Coefficient of variation (%)", [](const NamedStats& c) {
    return c.stats.cv ? fmt("%.2f", *c.stats.cv) : std::string("n/a");
  });
  row("Median", [](const NamedStats& c) {
    return c.has_median ? fmt("%.2f", c.stats.median) : std::string("n/a");
  });
  return out;
}

std::string format_anova_table(const AnovaTable& t) {
  constexpr std::size_t kW = 22;
  std::string out;
  auto line = [&](std::initializer_list<std::string> cells) {
    std::string l;
    for (const auto& c : cells) l += pad(c, kW);
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + '\n';
  };
  line({"Source of variation", "Sum of squares", "Degrees of freedom", "Mean square", "F", "p"});
  line({"Group", fmt("%.2f", t.ss_between), std::to_string(t.df_between), fmt("%.2f", t.ms_between),
        fmt("%.3f", t.f), fmt("%.3f", t.p)});
  line({"Error", fmt("%.2f", t.ss_within), std::to_string(t.df_within), fmt("%.2f", t.ms_within)});
  line({"Total", fmt("%.2f", t.ss_total), std::to_string(t.df_total)});
  return out;
}

std::string anova_to_json(const AnovaTable& t) {
  nlohmann::ordered_json j;
  j["ss_between"] = t.ss_between;
  j["ss_within"] = t.ss_within;
  j["ss_total"] = t.ss_total;
  j["df_between"] = t.df_between;
  j["df_within"] = t.df_within;
  j["df_total"] = t.df_total;
  j["ms_between"] = t.ms_between;
  j["ms_within"] = t.ms_within;
  j["f"] = t.f;
  j["p"] = t.p;
  return j.dump(2);
}

std::vector<NamedGroup> parse_scores_csv(std::string_view csv) {
  std::vector<NamedGroup> groups;
  bool header = true;
  std::size_t line_no = 0;
  for (auto line : detail::split(csv, '\n')) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (header) {
      if (line != "group,score") {
        throw StatsError(StatsErrorKind::InvalidInput, "line 1: expected header 'group,score'");
      }
      header = false;
      continue;
    }
    const auto f = detail::split(line, ',');
    const auto score = f.size() == 2 ? detail::parse_double(detail::trim(f[1])) : std::nullopt;
    const auto name = f.size() == 2 ? detail::trim(f[0]) : std::string_view{};
    if (!score || name.empty()) {
      throw StatsError(StatsErrorKind::InvalidInput,
                       "line " + std::to_string(line_no) + ": expected '<group>,<score>'");
    }
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const NamedGroup& g) { return g.name == name; });
    if (it == groups.end()) {
      groups.push_back({std::string(name), {}});
      it = std::prev(groups.end());
    }
    it->scores.push_back(*score);
  }
  if (header) throw StatsError(StatsErrorKind::InvalidInput, "empty CSV");
  return groups;
}

GroupSummary parse_summary(std::string_view text) {
  const auto f = detail::split(text, ',');
  if (f.size() == 3) {
    auto n = detail::parse_int<std::size_t>(detail::trim(f[0]));
    auto mean = detail::parse_double(detail::trim(f[1]));
    auto sd = detail::parse_double(detail::trim(f[2]));
    if (n && mean && sd) return {*n, *mean, *sd};
  }
  throw StatsError(StatsErrorKind::InvalidInput,
                   "summary '" + std::string(text) + "' is not of the form n,mean,sd");
}

}  // namespace agrotelem::stats
