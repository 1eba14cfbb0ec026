#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bbmlab {

struct SweepRow {
  double index = 0.0;
  std::string op;                 // module operation that produced the row
  double computed = 0.0;
  std::optional<double> target;
  double gap = 0.0;               // |computed - target| when target present
  std::optional<bool> passed;     // set only on asserted rows
  nlohmann::json params;          // audit trail: exact parameters used
};

struct SweepReport {
  std::string kind;
  std::vector<SweepRow> rows;
  nlohmann::json config;          // embedded for replay
  nlohmann::json extra;           // experiment-level artifacts
  std::string config_hash;
  std::string git_describe;
  double runtime_seconds = 0.0;

  bool any_asserted_failure() const;
  void sort_rows();
};

std::string format_double(double v);  // deterministic %.17g, locale-free
std::string fnv1a_hex(const std::string& data);

/// Atomic write (temp file + rename), parent directories created. The CSV
/// carries only deterministic content; volatile metadata lives in the JSON.
void write_report_csv(const SweepReport& rep, const std::string& path);
void write_report_json(const SweepReport& rep, const std::string& path);

std::string report_csv_text(const SweepReport& rep);
nlohmann::json report_json(const SweepReport& rep);

}  // namespace bbmlab
