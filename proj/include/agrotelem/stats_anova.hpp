#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agrotelem::stats {

enum class StatsErrorKind { EmptyInput, TooFewGroups, GroupTooSmall, InvalidInput, DegenerateWithin };

class StatsError : public std::invalid_argument {
 public:
  StatsError(StatsErrorKind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}
  StatsErrorKind kind() const { return kind_; }

 private:
  StatsErrorKind kind_;
};

struct DescriptiveStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;            // sample SD (n - 1); 0 when n == 1
  std::optional<double> cv;   // percent; empty when mean == 0
  double median = 0.0;
};

// Throws StatsError(EmptyInput).
DescriptiveStats describe(std::span<const double> values);

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct AnovaTable {
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ss_total = 0.0;
  int df_between = 0;
  int df_within = 0;
  int df_total = 0;
  double ms_between = 0.0;
  double ms_within = 0.0;
  double f = 0.0;
  double p = 1.0;
};

// One-way ANOVA from raw scores. Needs k >= 2 groups of n >= 2 and a positive
// within-group mean square.
AnovaTable anova_from_raw(std::span<const std::vector<double>> groups);

// Same decomposition from (n, mean, sample SD) per group.
AnovaTable anova_from_summary(std::span<const GroupSummary> groups);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double x, double a, double b);

// Upper tail of the F(df1, df2) distribution.
double f_sf(double f, double df1, double df2);

// Pooled description of all groups taken together (median unavailable).
GroupSummary pooled_summary(std::span<const GroupSummary> groups);

// Text output.
struct NamedStats {
  std::string name;
  DescriptiveStats stats;
  bool has_median = true;
};
std::string format_descriptive_table(std::span<const NamedStats> columns);
std::string format_anova_table(const AnovaTable& t);
std::string anova_to_json(const AnovaTable& t);

struct NamedGroup {
  std::string name;
  std::vector<double> scores;
};

// CSV with header `group,score`; groups keep their first-appearance order.
// Throws StatsError(InvalidInput) with the offending line number.
std::vector<NamedGroup> parse_scores_csv(std::string_view csv);

// "n,mean,sd". Throws StatsError(InvalidInput).
GroupSummary parse_summary(std::string_view text);

}  // namespace agrotelem::stats
