// airstar: headless runs, replays, suite evaluation and the live servers.
#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "airstar/airstar.h"

namespace {

using nlohmann::json;

struct Str {
  char* p = nullptr;
  ~Str() { airstar_string_free(p); }
  std::string str() const { return p != nullptr ? p : ""; }
};

struct Config {
  airstar_config* p = nullptr;
  ~Config() { airstar_config_free(p); }
};

// Prints the failure and returns the process exit code for it.
int report(int status) {
  std::cerr << "error: " << airstar_status_name(status) << ": " << airstar_last_error() << "\n";
  return 2;
}

void on_signal(int) { airstar_request_stop(); }

// Human-facing lines of the live stream; telemetry and frames are skipped.
void print_line(const char* line, void*) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) return;
  const std::string type = j.value("type", "");
  if (type == "event") {
    std::cout << "[" << j.value("level", "") << "] " << j.value("text", "") << "\n";
  } else if (type == "answer") {
    std::cout << "answer: " << j.value("text", "") << "\n";
  } else if (type == "command") {
    std::cout << "> " << j.value("text", "") << "\n";
  } else if (type == "plan") {
    std::cout << "plan " << j["plan"].value("plan_id", "") << " (attempt " << j["plan"].value("attempt", 0) << "):";
    for (const auto& s : j["plan"]["steps"]) std::cout << " " << s.value("tool", "");
    std::cout << "\n";
  } else if (type == "step_update" && j.value("status", "") != "running") {
    std::cout << "  step " << j.value("index", 0) << " " << j.value("status", "");
    if (!j["cause"].is_null()) std::cout << " (" << j["cause"].get<std::string>() << ")";
    std::cout << "\n";
  }
}

void print_raw(const char* line, void*) { std::cout << line << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AirStar UAV agent: headless runs, replay, evaluation and serving"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Config file (default: $AIRSTAR_CONFIG, then the bundled config)");

  auto* run = app.add_subcommand("run", "Run missions in combined mode on a scenario");
  std::string scenario = "campus";
  std::vector<std::string> missions;
  std::int64_t seed = -1;
  std::string record;
  bool headless = false;
  run->add_option("--scenario", scenario, "Scenario file or bundled name")->required();
  run->add_option("--mission", missions, "Mission instruction; repeat for several, run in order")->required();
  run->add_option("--seed", seed, "Random seed (default: the scenario seed)");
  run->add_option("--record", record, "Write every wire message to this NDJSON file");
  run->add_flag("--headless", headless, "Print only the per-mission summary");

  auto* rep = app.add_subcommand("replay", "Replay a record file");
  std::string rec_in;
  bool serve_replay = false;
  bool realtime = false;
  double speed = 1.0;
  std::string rep_scenario = "campus";
  std::string host;
  int port = -1;
  rep->add_option("--record", rec_in, "Record file")->required();
  rep->add_flag("--serve", serve_replay, "Serve the replay on /ws at its original cadence");
  rep->add_flag("--realtime", realtime, "Keep the original cadence when printing");
  rep->add_option("--speed", speed, "Cadence multiplier")->check(CLI::PositiveNumber);
  rep->add_option("--scenario", rep_scenario, "Scenario served on /scenario");
  rep->add_option("--host", host, "Listen address");
  rep->add_option("--port", port, "Listen port");

  auto* ev = app.add_subcommand("eval", "Evaluate an acceptance suite");
  std::string suite;
  std::string report_path;
  bool as_json = false;
  ev->add_option("--suite", suite, "Suite name or file")->required();
  ev->add_option("--report", report_path, "Also write the JSON report here");
  ev->add_flag("--json", as_json, "Print the JSON report instead of the table");

  auto* srv = app.add_subcommand("serve", "Serve the console endpoints (/ws, /scenario)");
  std::string mode = "combined";
  std::string serve_scenario = "campus";
  double duration = 0.0;
  std::string serve_record;
  srv->add_option("--mode", mode, "combined, station or onboard")
      ->check(CLI::IsMember({"combined", "station", "onboard"}));
  srv->add_option("--scenario", serve_scenario, "Scenario file or bundled name");
  srv->add_option("--host", host, "Listen address (onboard: station address)");
  srv->add_option("--port", port, "Listen port (onboard: station port)");
  srv->add_option("--record", serve_record, "Record client-facing messages");
  srv->add_option("--seed", seed, "Random seed");
  srv->add_option("--duration", duration, "Stop after this many seconds (default: until interrupted)");

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  Config cfg;
  if (int st = airstar_config_load(config_path.empty() ? nullptr : config_path.c_str(), &cfg.p)) return report(st);

  if (run->parsed()) {
    airstar_session* s = nullptr;
    if (int st = airstar_session_open(scenario.c_str(), cfg.p, seed, record.empty() ? nullptr : record.c_str(),
                                      headless ? nullptr : print_line, nullptr, &s)) {
      return report(st);
    }
    std::unique_ptr<airstar_session, void (*)(airstar_session*)> guard(s, airstar_session_close);
    bool all_ok = true;
    for (const auto& m : missions) {
      Str out;
      if (int st = airstar_session_run_mission(s, m.c_str(), &out.p)) return report(st);
      const json r = json::parse(out.str());
      const bool ok = r["final_state"] == "standby_hover";
      all_ok = all_ok && ok;
      std::cout << (ok ? "ok    " : "FAILED") << "  " << m << "  [" << r["final_state"].get<std::string>()
                << ", attempts " << r["attempts"] << ", " << r["ticks"] << " ticks]\n";
    }
    return all_ok ? 0 : 1;
  }

  if (rep->parsed()) {
    int st = serve_replay ? airstar_replay_serve(rec_in.c_str(), rep_scenario.c_str(),
                                                 host.empty() ? nullptr : host.c_str(), port, speed)
                          : airstar_replay(rec_in.c_str(), realtime ? 1 : 0, speed, print_raw, nullptr);
    return st != 0 ? report(st) : 0;
  }

  if (ev->parsed()) {
    Str js;
    Str table;
    if (int st = airstar_eval(suite.c_str(), cfg.p, &js.p, &table.p)) return report(st);
    if (!report_path.empty()) {
      std::FILE* f = std::fopen(report_path.c_str(), "w");
      if (f == nullptr) {
        std::cerr << "error: cannot write " << report_path << "\n";
        return 2;
      }
      std::fputs(js.str().c_str(), f);
      std::fputs("\n", f);
      std::fclose(f);
    }
    std::cout << (as_json ? js.str() + "\n" : table.str());
    const json r = json::parse(js.str());
    return r["summary"]["succeeded"] == r["summary"]["missions"] ? 0 : 1;
  }

  int st = airstar_serve(mode.c_str(), serve_scenario.c_str(), cfg.p, host.empty() ? nullptr : host.c_str(), port,
                         serve_record.empty() ? nullptr : serve_record.c_str(), seed, duration);
  return st != 0 ? report(st) : 0;
}
