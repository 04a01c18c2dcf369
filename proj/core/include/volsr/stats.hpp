#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace volsr {

/// Reference/test value pairs (e.g. diameters in mm). Labels are optional
/// row names carried through from the input table.
struct PairedMeasurements {
  std::vector<std::string> labels;
  std::vector<double> reference;
  std::vector<double> test;

  std::size_t size() const { return reference.size(); }
  void validate() const; // matched lengths, >= 2 pairs
};

/// Full subjects x raters matrix, row-major, no missing cells.
struct RatingTable {
  int subjects = 0;
  int raters = 0;
  std::vector<double> values;

  double at(int subject, int rater) const {
    return values[static_cast<std::size_t>(subject) * raters + rater];
  }
  double &at(int subject, int rater) {
    return values[static_cast<std::size_t>(subject) * raters + rater];
  }
  void validate() const; // >= 2 subjects, >= 2 raters, subjects*raters cells
};

struct BlandAltman {
  double bias = 0;
  double loa_low = 0;
  double loa_high = 0;
  int n = 0;
};

struct IccResult {
  double icc = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct AgreementReport {
  double bias = 0;
  double loa_low = 0;
  double loa_high = 0;
  double icc = 0;
  double icc_ci_low = 0;
  double icc_ci_high = 0;
  int n = 0;
};

/// Differences d = test - reference; bias = mean(d), limits of agreement
/// bias +- 1.96 * sample SD (n-1 denominator).
BlandAltman bland_altman(const PairedMeasurements &pairs);

/// One-way random-effects single-rater ICC(1,1) = (MSB - MSW) /
/// (MSB + (k-1)*MSW) over n subjects and k raters, with the 95% F-based
/// confidence interval: F = MSB/MSW on (n-1, n(k-1)) degrees of freedom,
/// bounds F/F_0.975(n-1, n(k-1)) and F*F_0.975(n(k-1), n-1) pushed through
/// the same ICC transform. Exactly agreeing raters (MSW = 0) give ICC 1
/// with interval [1, 1]; a table with zero between- AND within-subject
/// variance has no defined ICC and throws.
IccResult icc_oneway(const RatingTable &table);

/// CDF of the F distribution via the regularized incomplete beta function.
double f_cdf(double x, double d1, double d2);

/// Inverse CDF by bracketing and bisection; absolute tolerance 1e-10 in
/// probability space. Requires p in (0,1) and d1, d2 >= 1.
double f_quantile(double p, double d1, double d2);

/// Columns: id, reference, test.
PairedMeasurements read_pairs_csv(const std::string &path);
/// Columns: subject, rater, value (long format); pivoted to a full matrix
/// with subjects and raters ordered by first appearance.
RatingTable read_ratings_csv(const std::string &path);
/// Single row: bias, loa_low, loa_high, icc, icc_ci_low, icc_ci_high, n.
void write_agreement_csv(const AgreementReport &report,
                         const std::string &path);

} // namespace volsr
