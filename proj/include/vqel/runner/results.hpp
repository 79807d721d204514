#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vqel/error.hpp"
#include "vqel/runner/run.hpp"

NLOHMANN_JSON_NAMESPACE_BEGIN
template <class T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& v) {
    if (v) j = *v;
    else j = nullptr;
  }
  static void from_json(const json& j, std::optional<T>& v) {
    if (j.is_null()) v.reset();
    else v = j.get<T>();
  }
};
NLOHMANN_JSON_NAMESPACE_END

namespace vqel::runner {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SeedResult, seed, test, self_play, validation_accuracy, curve,
                                                sender_parameters, estimator_parameters, wall_clock)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Stat, mean, std)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Aggregate, accuracy, active_words, topsim, conditional_entropy,
                                                unique_messages, self_play_accuracy)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunResult, config, fingerprint, seeds, aggregate, wall_clock)

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return nlohmann::json(a) == nlohmann::json(b);
}

// Numeric identity ignoring wall-clock timings.
inline bool same_numbers(const RunResult& a, const RunResult& b) {
  if (!(a.config == b.config) || a.fingerprint != b.fingerprint || !(a.aggregate == b.aggregate)) return false;
  if (a.seeds.size() != b.seeds.size()) return false;
  for (std::size_t i = 0; i < a.seeds.size(); ++i) {
    auto x = a.seeds[i], y = b.seeds[i];
    x.wall_clock = y.wall_clock = 0.0;
    if (!(x == y)) return false;
  }
  return true;
}

inline bool operator==(const RunResult& a, const RunResult& b) {
  return same_numbers(a, b) && a.wall_clock == b.wall_clock && [&] {
    for (std::size_t i = 0; i < a.seeds.size(); ++i)
      if (a.seeds[i].wall_clock != b.seeds[i].wall_clock) return false;
    return true;
  }();
}

// Writes to a sibling temp file and renames it into place so readers never
// see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline std::string to_json_text(const RunResult& r) { return nlohmann::json(r).dump(2); }

inline RunResult run_result_from_json(const nlohmann::json& j) { return j.get<RunResult>(); }

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline const char* summary_header() { return "method,variant,sender_update,ACC_mean,ACC_std,AW,TopSim,HCM"; }

inline std::string summary_row(const RunResult& r) {
  const auto& a = r.aggregate;
  const auto& c = r.config;
  std::string row = to_string(c.method) + "," + to_string(c.variant) + "," + games::to_string(c.sender_update) + ",";
  row += fixed4(a.accuracy.mean) + "," + (a.accuracy.std ? fixed4(*a.accuracy.std) : std::string()) + ",";
  row += fixed4(a.active_words.mean) + "," + fixed4(a.topsim.mean) + "," + fixed4(a.conditional_entropy.mean);
  return row;
}

inline std::string summary_csv(const std::vector<RunResult>& runs) {
  std::string out = std::string(summary_header()) + "\n";
  for (const auto& r : runs) out += summary_row(r) + "\n";
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "B,ACC\n";
  for (const auto& r : rows) out += std::to_string(r.candidates) + "," + fixed4(r.accuracy) + "\n";
  return out;
}

// results.json holds every run (an array), summary.csv one row per run.
inline void export_results(const std::filesystem::path& dir, const std::vector<RunResult>& runs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : runs) j.push_back(r);
  write_atomic(dir / "results.json", j.dump(2));
  write_atomic(dir / "summary.csv", summary_csv(runs));
}

inline std::vector<RunResult> load_results(const std::filesystem::path& file) {
  const auto j = parse_json_file(file);
  std::vector<RunResult> out;
  if (j.is_array())
    for (const auto& x : j) out.push_back(x.get<RunResult>());
  else
    out.push_back(j.get<RunResult>());
  return out;
}

}  // namespace vqel::runner
