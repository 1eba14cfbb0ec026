#include "bbmlab/report.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bbmlab/errors.hpp"

namespace bbmlab {

bool SweepReport::any_asserted_failure() const {
  for (const auto& r : rows)
    if (r.passed && !*r.passed) return true;
  return false;
}

void SweepReport::sort_rows() {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.index < b.index; });
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_csv_text(const SweepReport& rep) {
  if (rep.kind == "eigen-sweep") {
    std::string out = "index,s,lambda,gap_to_limit,ef_distance,converged\n";
    int i = 1;
    for (const auto& r : rep.rows) {
      if (r.op != "first_eigen_nonlocal") continue;
      out += std::to_string(i++);
      out += ',';
      out += format_double(r.index);
      out += ',';
      out += format_double(r.params.value("lambda", r.computed));
      out += ',';
      out += format_double(r.params.value("gap_to_limit", r.gap));
      out += ',';
      out += format_double(r.params.value("ef_distance", 0.0));
      out += ',';
      out += r.params.value("converged", false) ? "1" : "0";
      out += '\n';
    }
    return out;
  }
  std::string out = "index,op,computed,target,gap,passed\n";
  for (const auto& r : rep.rows) {
    out += format_double(r.index);
    out += ',';
    out += r.op;
    out += ',';
    out += format_double(r.computed);
    out += ',';
    out += r.target ? format_double(*r.target) : "";
    out += ',';
    out += format_double(r.gap);
    out += ',';
    out += r.passed ? (*r.passed ? "1" : "0") : "";
    out += '\n';
  }
  return out;
}

nlohmann::json report_json(const SweepReport& rep) {
  nlohmann::json j;
  j["kind"] = rep.kind;
  j["config"] = rep.config;
  j["config_hash"] = rep.config_hash;
  j["git_describe"] = rep.git_describe;
  j["runtime_seconds"] = rep.runtime_seconds;
  j["extra"] = rep.extra;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json row;
    row["index"] = r.index;
    row["op"] = r.op;
    row["computed"] = r.computed;
    if (r.target) row["target"] = *r.target;
    row["gap"] = r.gap;
    if (r.passed) row["passed"] = *r.passed;
    row["params"] = r.params;
    j["rows"].push_back(row);
  }
  return j;
}

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " +
                          ec.message());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f << content;
    if (!f.good()) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

}  // namespace

void write_report_csv(const SweepReport& rep, const std::string& path) {
  atomic_write(path, report_csv_text(rep));
}

void write_report_json(const SweepReport& rep, const std::string& path) {
  atomic_write(path, report_json(rep).dump(2) + "\n");
}

}  // namespace bbmlab
