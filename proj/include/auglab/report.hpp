#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "auglab/core.hpp"

namespace auglab {

struct ReportRow {
  std::size_t rep = 0;
  std::string grid_key;
  std::string metric;
  double value = 0.0;
};

struct SummaryEntry {
  std::string grid_key;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
  bool derived = false;  // computed from other summaries rather than from rows
};

/// Per-replicate rows plus a summary. Rows and summaries keep insertion
/// order so the CSV and JSON output are byte-stable for a given seed.
class ExperimentReport {
 public:
  explicit ExperimentReport(std::string experiment) : experiment_(std::move(experiment)) {}

  const std::string& experiment() const { return experiment_; }
  nlohmann::ordered_json& config() { return config_; }
  const nlohmann::ordered_json& config() const { return config_; }

  /// Throws NumericalError for non-finite values.
  void add(std::size_t rep, const std::string& grid_key, const std::string& metric, double value);
  void add_derived(const std::string& grid_key, const std::string& metric, double value, double se);

  const std::vector<ReportRow>& rows() const { return rows_; }
  /// Mean and standard error per (grid_key, metric), followed by derived entries.
  std::vector<SummaryEntry> summary() const;
  std::optional<SummaryEntry> find(const std::string& grid_key, const std::string& metric) const;
  std::vector<double> values(const std::string& grid_key, const std::string& metric) const;

  /// Header `experiment,rep,grid_key,metric,value`.
  std::string to_csv() const;
  std::string to_json() const;

 private:
  std::string experiment_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::vector<ReportRow> rows_;
  std::vector<SummaryEntry> derived_;
};

/// Ratio of means of paired samples with a delta-method standard error.
MeanStderr ratio_of_means(const std::vector<double>& num, const std::vector<double>& den);

std::string format_double(double v);

}  // namespace auglab
