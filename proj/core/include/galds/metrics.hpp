#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace galds {

// Range-relative errors in percent. The numerator of `mre` is the plain root
// of the summed squared residuals (no averaging over points); both are
// normalized by the spread of the exact field, for vectors the spread of the
// pointwise magnitudes.
struct FieldError {
  double mre = 0.0;
  double max_re = 0.0;
};

FieldError scalar_field_error(std::span<const double> approx, std::span<const double> exact);
FieldError vector_field_error(std::span<const double> approx, std::span<const double> exact,
                              int64_t dims);

// Same statistics plus the per-node residual in percent of the range (vector
// fields: difference magnitude), for pointwise export alongside the fields.
struct ErrorReport {
  double mre = 0.0;
  double max_re = 0.0;
  std::vector<double> per_node;
};

ErrorReport scalar_error_report(std::span<const double> approx, std::span<const double> exact);
ErrorReport vector_error_report(std::span<const double> approx, std::span<const double> exact,
                                int64_t dims);

// Errors for a field that decomposes into groups of nodes (one cross-section
// each): the root-sum-square numerator is taken per group while the range in
// the denominator spans the whole exact field, so near-uniform groups do not
// degenerate. `mre` is the mean over groups, `max_re` the global nodal max.
// `bounds` holds G+1 ascending node indices; group k is [bounds[k], bounds[k+1]).
FieldError scalar_grouped_error(std::span<const double> approx, std::span<const double> exact,
                                std::span<const int64_t> bounds);
FieldError vector_grouped_error(std::span<const double> approx, std::span<const double> exact,
                                int64_t dims, std::span<const int64_t> bounds);

struct MetricRow {
  std::string name;
  double mre = 0.0;
  double max_re = 0.0;
};

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows);
void write_metrics_json(const std::filesystem::path& path, std::span<const MetricRow> rows);

}  // namespace galds
