#include "volsr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "volsr/csv.hpp"
#include "volsr/errors.hpp"

namespace volsr {

void PairedMeasurements::validate() const {
  if (reference.size() != test.size())
    throw stats_error("paired measurements have mismatched lengths");
  if (!labels.empty() && labels.size() != reference.size())
    throw stats_error("pair labels do not match the number of pairs");
  if (reference.size() < 2)
    throw stats_error("need at least 2 pairs for dispersion statistics");
}

void RatingTable::validate() const {
  if (subjects < 2 || raters < 2)
    throw stats_error("rating table needs >= 2 subjects and >= 2 raters");
  if (values.size() !=
      static_cast<std::size_t>(subjects) * static_cast<std::size_t>(raters))
    throw stats_error("rating table is not a full subjects x raters matrix");
}

BlandAltman bland_altman(const PairedMeasurements &pairs) {
  pairs.validate();
  const std::size_t n = pairs.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = pairs.test[i] - pairs.reference[i];

  double bias = 0.0;
  for (double v : d)
    bias += v;
  bias /= static_cast<double>(n);

  double ss = 0.0;
  for (double v : d)
    ss += (v - bias) * (v - bias);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  BlandAltman r;
  r.bias = bias;
  r.loa_low = bias - 1.96 * sd;
  r.loa_high = bias + 1.96 * sd;
  r.n = static_cast<int>(n);
  return r;
}

namespace {

// Continued fraction for the regularized incomplete beta, modified Lentz.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 3e-16, kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny)
    d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny)
      d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny)
      c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny)
      d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny)
      c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps)
      break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  const double ln_pre = std::lgamma(a + b) - std::lgamma(a) -
                        std::lgamma(b) + a * std::log(x) +
                        b * std::log1p(-x);
  const double pre = std::exp(ln_pre);
  if (x < (a + 1.0) / (a + b + 2.0))
    return pre * betacf(a, b, x) / a;
  return 1.0 - pre * betacf(b, a, 1.0 - x) / b;
}

double icc_from_f(double f, int raters) {
  return (f - 1.0) / (f + static_cast<double>(raters) - 1.0);
}

} // namespace

IccResult icc_oneway(const RatingTable &table) {
  table.validate();
  const int n = table.subjects, k = table.raters;

  double grand = 0.0;
  std::vector<double> row_mean(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j)
      s += table.at(i, j);
    row_mean[static_cast<std::size_t>(i)] = s / k;
    grand += s;
  }
  grand /= static_cast<double>(n) * k;

  double ssb = 0.0, ssw = 0.0;
  for (int i = 0; i < n; ++i) {
    const double rm = row_mean[static_cast<std::size_t>(i)];
    ssb += (rm - grand) * (rm - grand);
    for (int j = 0; j < k; ++j)
      ssw += (table.at(i, j) - rm) * (table.at(i, j) - rm);
  }
  ssb *= k;

  if (ssb == 0.0 && ssw == 0.0)
    throw stats_error("constant rating table: ICC undefined");

  IccResult r;
  if (ssw == 0.0) {
    r.icc = r.ci_low = r.ci_high = 1.0;
    return r;
  }

  const double msb = ssb / (n - 1);
  const double msw = ssw / (static_cast<double>(n) * (k - 1));
  const double f = msb / msw;
  const double d1 = n - 1, d2 = static_cast<double>(n) * (k - 1);

  r.icc = icc_from_f(f, k);
  r.ci_low = icc_from_f(f / f_quantile(0.975, d1, d2), k);
  r.ci_high = icc_from_f(f * f_quantile(0.975, d2, d1), k);
  return r;
}

double f_cdf(double x, double d1, double d2) {
  if (!(d1 >= 1.0) || !(d2 >= 1.0))
    throw stats_error("F distribution needs d1, d2 >= 1");
  if (x <= 0.0)
    return 0.0;
  return reg_inc_beta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

double f_quantile(double p, double d1, double d2) {
  if (!(p > 0.0 && p < 1.0))
    throw stats_error("quantile level must lie strictly inside (0,1)");
  if (!(d1 >= 1.0) || !(d2 >= 1.0))
    throw stats_error("F distribution needs d1, d2 >= 1");

  double lo = 0.0, hi = 1.0;
  while (f_cdf(hi, d1, d2) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300)
      throw stats_error("F quantile bracket expansion failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double c = f_cdf(mid, d1, d2);
    if (std::abs(c - p) <= 1e-12)
      return mid;
    (c < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

PairedMeasurements read_pairs_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  const int ci = t.column("id"), cr = t.column("reference"),
            ct = t.column("test");
  PairedMeasurements p;
  for (const auto &row : t.rows) {
    p.labels.push_back(row[static_cast<std::size_t>(ci)]);
    p.reference.push_back(std::stod(row[static_cast<std::size_t>(cr)]));
    p.test.push_back(std::stod(row[static_cast<std::size_t>(ct)]));
  }
  p.validate();
  return p;
}

RatingTable read_ratings_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  const int cs = t.column("subject"), cr = t.column("rater"),
            cv = t.column("value");

  std::vector<std::string> subj_order, rater_order;
  std::map<std::string, int> subj_ix, rater_ix;
  auto intern = [](const std::string &key, std::vector<std::string> &order,
                   std::map<std::string, int> &ix) {
    auto it = ix.find(key);
    if (it != ix.end())
      return it->second;
    const int id = static_cast<int>(order.size());
    order.push_back(key);
    ix.emplace(key, id);
    return id;
  };

  struct Cell {
    int s, r;
    double v;
  };
  std::vector<Cell> cells;
  for (const auto &row : t.rows)
    cells.push_back({intern(row[static_cast<std::size_t>(cs)], subj_order,
                            subj_ix),
                     intern(row[static_cast<std::size_t>(cr)], rater_order,
                            rater_ix),
                     std::stod(row[static_cast<std::size_t>(cv)])});

  RatingTable table;
  table.subjects = static_cast<int>(subj_order.size());
  table.raters = static_cast<int>(rater_order.size());
  if (table.subjects < 2 || table.raters < 2)
    throw stats_error("ratings csv needs >= 2 subjects and >= 2 raters");
  table.values.assign(static_cast<std::size_t>(table.subjects) *
                          static_cast<std::size_t>(table.raters),
                      0.0);
  std::vector<char> seen(table.values.size(), 0);
  for (const Cell &c : cells) {
    const std::size_t at =
        static_cast<std::size_t>(c.s) * table.raters + c.r;
    if (seen[at])
      throw stats_error("duplicate rating for subject " +
                        subj_order[static_cast<std::size_t>(c.s)] +
                        ", rater " +
                        rater_order[static_cast<std::size_t>(c.r)]);
    seen[at] = 1;
    table.values[at] = c.v;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw stats_error("missing rating cell: the table must be full");
  return table;
}

void write_agreement_csv(const AgreementReport &report,
                         const std::string &path) {
  CsvTable t;
  t.header = {"bias",        "loa_low",    "loa_high", "icc",
              "icc_ci_low",  "icc_ci_high", "n"};
  t.rows.push_back({csv_num(report.bias), csv_num(report.loa_low),
                    csv_num(report.loa_high), csv_num(report.icc),
                    csv_num(report.icc_ci_low), csv_num(report.icc_ci_high),
                    std::to_string(report.n)});
  write_csv(t, path);
}

} // namespace volsr
