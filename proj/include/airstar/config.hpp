#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "airstar/onboard.hpp"
#include "airstar/planner.hpp"

namespace airstar::config {

struct Backends {
  // Empty URL: the deterministic mock is used.
  std::string planner_url;
  std::string grounding_url;
  std::string scorer_url;
  std::string qa_url;
  double timeout_s = 10.0;
};

struct Latency {
  double mean_ms = 0.0;
  double jitter_ms = 0.0;
};

struct Config {
  onboard::OnboardConfig onboard;
  planner::Budgets budgets;
  int max_attempts = planner::kMaxAttempts;
  double return_offset = 3.0;      // m from the user pedestrian
  double object_standoff = 2.0;    // m
  double object_min_altitude = 2.0;
  double track_standoff = 3.0;     // m
  double link_timeout_s = 5.0;     // station gives up on a silent onboard link
  Backends backends;
  Latency latency;
  std::string knowledge_journal;   // empty: in-memory knowledge base
  std::string prompt_template;     // empty: the bundled planner prompt
  std::string host = "127.0.0.1";
  int port = 8765;
};

// Unknown keys and wrongly typed values throw SchemaError.
Config from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& c);

// Reads one config file. Throws IoError or SchemaError.
Config load_file(const std::string& path);

// Config path in effect: the explicit path when given, else $AIRSTAR_CONFIG,
// else the bundled default when it exists; nullopt means built-in defaults.
std::optional<std::string> resolve_path(const std::optional<std::string>& explicit_path);

Config load(const std::optional<std::string>& explicit_path = std::nullopt);

// Bundled data directory ($AIRSTAR_DATA_DIR overrides the build-time path).
std::string data_dir();

// The planner prompt template text named by the config.
std::string prompt_template(const Config& c);

}  // namespace airstar::config
