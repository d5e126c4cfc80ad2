#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airstar/station.hpp"

namespace airstar::session {

struct Options {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::string record_path;            // empty: no record file
};

// Combined mode: station and onboard in one process, stepped in lockstep.
// Fully deterministic for a given scenario, config and seed.
class Session {
 public:
  Session(std::shared_ptr<const sim::Scene> scene, config::Config cfg, Options opt = {},
          station::ClientSink* sink = nullptr);

  // Takes off on first use and acknowledges an earlier failure before
  // starting the mission.
  station::MissionReport run(const std::string& text);

  station::Station& station() { return *station_; }
  onboard::Onboard& onboard() { return *onboard_; }
  station::LockstepPort& port() { return *port_; }

 private:
  std::unique_ptr<onboard::Onboard> onboard_;
  std::unique_ptr<station::LockstepPort> port_;
  station::NullSink null_;
  std::unique_ptr<station::Recorder> recorder_;
  std::unique_ptr<station::Station> station_;
};

// Knowledge base named by the config: its journal when set, else in memory.
kb::KnowledgeBase open_knowledge(const config::Config& cfg);

// Resolves a scenario argument: an existing path, else a bundled scenario name.
std::string scenario_path(const std::string& arg);

// ---- replay ----------------------------------------------------------------------------

// Decodes a record file. Throws DecodeError naming the 1-based line.
std::vector<wire::WireMessage> read_record(const std::string& path);

// Re-emits recorded messages; events carry replay = true. With `realtime`,
// telemetry ticks are spaced 0.1 s / speed apart on the wall clock.
void replay(const std::vector<wire::WireMessage>& messages, station::ClientSink& sink, bool realtime,
            double speed = 1.0);

// ---- eval -----------------------------------------------------------------------------

struct SuiteCase {
  std::string name;
  std::string scenario;  // path or bundled scenario name
  std::vector<std::string> missions;
};

struct Suite {
  std::string name;
  std::vector<SuiteCase> cases;
};

// An existing path, else data/suites/<name>.json. Throws NotFound.
Suite load_suite(const std::string& name_or_path);

// One entry per mission: success, path length, min clearance, replans, ticks.
nlohmann::json evaluate(const Suite& suite, const config::Config& cfg);

// Fixed-width table of an evaluate() report.
std::string format_report(const nlohmann::json& report);

}  // namespace airstar::session
