#include "galds/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "galds/error.hpp"

namespace galds {
namespace {

double checked_range(double lo, double hi) {
  const double range = hi - lo;
  const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
  if (range <= 1e-14 * scale)
    fail(ErrorCode::numeric, "field range is degenerate, relative error undefined");
  return range;
}

}  // namespace

ErrorReport scalar_error_report(std::span<const double> approx, std::span<const double> exact) {
  if (approx.size() != exact.size() || exact.empty())
    fail(ErrorCode::validation, "field error needs matching non-empty samples");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double sq = 0.0;
  ErrorReport rep;
  rep.per_node.resize(exact.size());
  for (size_t i = 0; i < exact.size(); ++i) {
    lo = std::min(lo, exact[i]);
    hi = std::max(hi, exact[i]);
    const double d = approx[i] - exact[i];
    sq += d * d;
    rep.per_node[i] = std::abs(d);
  }
  const double range = checked_range(lo, hi);
  for (double& v : rep.per_node) {
    v /= range;  // fraction of the range; the summary stats are in percent
    rep.max_re = std::max(rep.max_re, 100.0 * v);
  }
  rep.mre = 100.0 * std::sqrt(sq) / range;
  return rep;
}

ErrorReport vector_error_report(std::span<const double> approx, std::span<const double> exact,
                                int64_t dims) {
  if (dims < 1 || approx.size() != exact.size() || exact.empty() || exact.size() % dims != 0)
    fail(ErrorCode::validation, "vector field error needs matching N x dims samples");
  const size_t n = exact.size() / dims;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double sq = 0.0;
  ErrorReport rep;
  rep.per_node.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double mag = 0.0, dsq = 0.0;
    for (int64_t c = 0; c < dims; ++c) {
      const double e = exact[i * dims + c];
      const double d = approx[i * dims + c] - e;
      mag += e * e;
      dsq += d * d;
    }
    lo = std::min(lo, std::sqrt(mag));
    hi = std::max(hi, std::sqrt(mag));
    sq += dsq;
    rep.per_node[i] = std::sqrt(dsq);
  }
  const double range = checked_range(lo, hi);
  for (double& v : rep.per_node) {
    v /= range;  // fraction of the range; the summary stats are in percent
    rep.max_re = std::max(rep.max_re, 100.0 * v);
  }
  rep.mre = 100.0 * std::sqrt(sq) / range;
  return rep;
}

namespace {

// Per-node residual magnitudes plus the exact-field spread, shared by the
// grouped variants. `diff` receives one entry per node.
double node_residuals(std::span<const double> approx, std::span<const double> exact,
                      int64_t dims, std::vector<double>& diff) {
  const size_t n = exact.size() / dims;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  diff.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double mag = 0.0, dsq = 0.0;
    for (int64_t c = 0; c < dims; ++c) {
      const double e = exact[i * dims + c];
      const double d = approx[i * dims + c] - e;
      mag += e * e;
      dsq += d * d;
    }
    lo = std::min(lo, std::sqrt(mag));
    hi = std::max(hi, std::sqrt(mag));
    diff[i] = std::sqrt(dsq);
  }
  return checked_range(lo, hi);
}

FieldError grouped_error(std::span<const double> approx, std::span<const double> exact,
                         int64_t dims, std::span<const int64_t> bounds) {
  if (dims < 1 || approx.size() != exact.size() || exact.empty() || exact.size() % dims != 0)
    fail(ErrorCode::validation, "grouped field error needs matching N x dims samples");
  const int64_t n = static_cast<int64_t>(exact.size() / dims);
  if (bounds.size() < 2 || bounds.front() != 0 || bounds.back() != n)
    fail(ErrorCode::validation, "group bounds must cover the field");
  std::vector<double> diff;
  const double range = node_residuals(approx, exact, dims, diff);
  FieldError err;
  double mre_sum = 0.0;
  for (size_t g = 0; g + 1 < bounds.size(); ++g) {
    if (bounds[g + 1] <= bounds[g])
      fail(ErrorCode::validation, "group bounds must be strictly ascending");
    double sq = 0.0;
    for (int64_t i = bounds[g]; i < bounds[g + 1]; ++i) {
      sq += diff[i] * diff[i];
      err.max_re = std::max(err.max_re, 100.0 * diff[i] / range);
    }
    mre_sum += 100.0 * std::sqrt(sq) / range;
  }
  err.mre = mre_sum / static_cast<double>(bounds.size() - 1);
  return err;
}

}  // namespace

FieldError scalar_grouped_error(std::span<const double> approx, std::span<const double> exact,
                                std::span<const int64_t> bounds) {
  return grouped_error(approx, exact, 1, bounds);
}

FieldError vector_grouped_error(std::span<const double> approx, std::span<const double> exact,
                                int64_t dims, std::span<const int64_t> bounds) {
  return grouped_error(approx, exact, dims, bounds);
}

FieldError scalar_field_error(std::span<const double> approx, std::span<const double> exact) {
  const ErrorReport rep = scalar_error_report(approx, exact);
  return {rep.mre, rep.max_re};
}

FieldError vector_field_error(std::span<const double> approx, std::span<const double> exact,
                              int64_t dims) {
  const ErrorReport rep = vector_error_report(approx, exact, dims);
  return {rep.mre, rep.max_re};
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << "name,mre_percent,max_re_percent\n";
  char buf[64];
  for (const MetricRow& r : rows) {
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", r.mre, r.max_re);
    out << r.name << buf;
  }
}

void write_metrics_json(const std::filesystem::path& path, std::span<const MetricRow> rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const MetricRow& r : rows)
    doc.push_back({{"name", r.name}, {"mre_percent", r.mre}, {"max_re_percent", r.max_re}});
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace galds
