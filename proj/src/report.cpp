#include "auglab/report.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace auglab {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void ExperimentReport::add(std::size_t rep, const std::string& grid_key, const std::string& metric,
                           double value) {
  if (!std::isfinite(value)) {
    throw NumericalError(experiment_ + ": non-finite " + metric + " at rep " + std::to_string(rep));
  }
  rows_.push_back({rep, grid_key, metric, value});
}

void ExperimentReport::add_derived(const std::string& grid_key, const std::string& metric,
                                   double value, double se) {
  if (!std::isfinite(value) || !std::isfinite(se)) {
    throw NumericalError(experiment_ + ": non-finite derived " + metric);
  }
  derived_.push_back({grid_key, metric, value, se, 0, true});
}

std::vector<double> ExperimentReport::values(const std::string& grid_key,
                                             const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : rows_) {
    if (r.grid_key == grid_key && r.metric == metric) out.push_back(r.value);
  }
  return out;
}

std::vector<SummaryEntry> ExperimentReport::summary() const {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows_) {
    auto key = std::make_pair(r.grid_key, r.metric);
    auto it = groups.find(key);
    if (it == groups.end()) {
      order.push_back(key);
      groups[key].push_back(r.value);
    } else {
      it->second.push_back(r.value);
    }
  }
  std::vector<SummaryEntry> out;
  for (const auto& key : order) {
    const auto& vals = groups[key];
    const MeanStderr ms = mean_stderr(vals);
    out.push_back({key.first, key.second, ms.mean, ms.se, vals.size(), false});
  }
  out.insert(out.end(), derived_.begin(), derived_.end());
  return out;
}

std::optional<SummaryEntry> ExperimentReport::find(const std::string& grid_key,
                                                   const std::string& metric) const {
  for (const auto& s : summary()) {
    if (s.grid_key == grid_key && s.metric == metric) return s;
  }
  return std::nullopt;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "experiment,rep,grid_key,metric,value\n";
  for (const auto& r : rows_) {
    os << experiment_ << ',' << r.rep << ',' << r.grid_key << ',' << r.metric << ','
       << format_double(r.value) << '\n';
  }
  return os.str();
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment_;
  j["config"] = config_;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : rows_) {
    rows.push_back({{"rep", r.rep}, {"grid_key", r.grid_key}, {"metric", r.metric}, {"value", r.value}});
  }
  j["rows"] = rows;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& s : this->summary()) {
    nlohmann::ordered_json e = {{"grid_key", s.grid_key}, {"metric", s.metric},
                                {"mean", s.mean},         {"se", s.se}};
    if (s.derived) {
      e["derived"] = true;
    } else {
      e["count"] = s.count;
    }
    summary.push_back(e);
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

MeanStderr ratio_of_means(const std::vector<double>& num, const std::vector<double>& den) {
  if (num.size() != den.size() || num.empty()) throw ConfigError("ratio needs paired samples");
  const MeanStderr a = mean_stderr(num);
  const MeanStderr b = mean_stderr(den);
  if (b.mean == 0.0) throw NumericalError("ratio of means with zero denominator");
  MeanStderr out;
  out.mean = a.mean / b.mean;
  if (num.size() < 2) return out;
  // Linearization: R_hat - R ~ mean(a_i - R b_i) / mean(b).
  std::vector<double> resid(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) resid[i] = num[i] - out.mean * den[i];
  out.se = mean_stderr(resid).se / std::abs(b.mean);
  return out;
}

}  // namespace auglab
