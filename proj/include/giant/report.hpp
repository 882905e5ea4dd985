#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "giant/errors.hpp"
#include "giant/rng.hpp"

namespace giant {

inline constexpr const char* kArtifactName = "giantlab";
inline constexpr const char* kArtifactVersion = "0.1.0";

using Json = nlohmann::ordered_json;

struct Verdict {
  std::string criterion;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  // Signed distance to the threshold; positive means passing.
  double margin = 0.0;
  std::string note;
};

// value <= threshold
inline Verdict verdict_at_most(std::string id, double value, double threshold, std::string note = {}) {
  return {std::move(id), value <= threshold, value, threshold, threshold - value, std::move(note)};
}

// value >= threshold
inline Verdict verdict_at_least(std::string id, double value, double threshold, std::string note = {}) {
  return {std::move(id), value >= threshold, value, threshold, value - threshold, std::move(note)};
}

// |value - centre| <= half_width; threshold records the half width.
inline Verdict verdict_within(std::string id, double value, double centre, double half_width, std::string note = {}) {
  const double dev = std::fabs(value - centre);
  return {std::move(id), dev <= half_width, value, half_width, half_width - dev, std::move(note)};
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

inline std::string config_hash(const Json& config) { return hex64(detail::fnv1a(config.dump())); }

inline Json header_json(const Json& config) {
  Json h;
  h["artifact"] = kArtifactName;
  h["version"] = kArtifactVersion;
  h["config_hash"] = config_hash(config);
  return h;
}

struct ExperimentReport {
  std::string experiment;
  Json config = Json::object();
  std::vector<Json> records;
  Json aggregates = Json::object();
  std::vector<Verdict> verdicts;

  [[nodiscard]] bool all_passed() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }

  [[nodiscard]] const Verdict* find(const std::string& id) const {
    for (const auto& v : verdicts)
      if (v.criterion == id) return &v;
    return nullptr;
  }

  [[nodiscard]] std::string records_jsonl() const {
    std::string out;
    for (const auto& r : records) {
      out += r.dump();
      out += '\n';
    }
    return out;
  }

  [[nodiscard]] Json summary_json() const {
    Json s;
    s["header"] = header_json(config);
    s["experiment"] = experiment;
    s["config"] = config;
    s["aggregates"] = aggregates;
    Json vs = Json::array();
    for (const auto& v : verdicts) {
      Json j;
      j["criterion"] = v.criterion;
      j["pass"] = v.pass;
      j["value"] = v.value;
      j["threshold"] = v.threshold;
      j["margin"] = v.margin;
      if (!v.note.empty()) j["note"] = v.note;
      vs.push_back(std::move(j));
    }
    s["verdicts"] = std::move(vs);
    s["all_passed"] = all_passed();
    return s;
  }

  [[nodiscard]] std::string summary_csv() const {
    std::ostringstream os;
    os << "# " << kArtifactName << ' ' << kArtifactVersion << " config_hash=" << config_hash(config) << '\n';
    os << "criterion,pass,value,threshold,margin\n";
    os << std::setprecision(17);
    for (const auto& v : verdicts) {
      os << v.criterion << ',' << (v.pass ? "true" : "false") << ',' << v.value << ',' << v.threshold << ','
         << v.margin << '\n';
    }
    return os.str();
  }
};

// Writes `contents` to a sibling temp file, then renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write output file '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

struct ReportPaths {
  std::filesystem::path records;
  std::filesystem::path summary_json;
  std::filesystem::path summary_csv;
};

inline ReportPaths write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                                const std::string& stem) {
  ReportPaths p{dir / (stem + ".records.jsonl"), dir / (stem + ".summary.json"), dir / (stem + ".summary.csv")};
  write_file_atomic(p.records, report.records_jsonl());
  write_file_atomic(p.summary_json, report.summary_json().dump(2) + "\n");
  write_file_atomic(p.summary_csv, report.summary_csv());
  return p;
}

}  // namespace giant
