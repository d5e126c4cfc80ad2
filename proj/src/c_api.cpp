#include "airstar/airstar.h"

#include <atomic>
#include <cstring>
#include <iostream>
#include <thread>

#include "airstar/error.hpp"
#include "airstar/runtime.hpp"
#include "airstar/server.hpp"
#include "airstar/session.hpp"

using namespace airstar;
using nlohmann::json;

struct airstar_config {
  config::Config cfg;
};

struct LineSink : station::ClientSink {
  airstar_line_cb cb = nullptr;
  void* user = nullptr;
  void publish(const wire::WireMessage& m) override {
    if (cb != nullptr) cb(wire::encode(m).c_str(), user);
  }
};

struct airstar_session {
  LineSink listener;
  std::unique_ptr<session::Session> s;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stop{false};

int set_error(int status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

template <class F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return AIRSTAR_OK;
  } catch (const Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(AIRSTAR_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(AIRSTAR_E_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

config::Config cfg_or_default(const airstar_config* c) { return c != nullptr ? c->cfg : config::Config{}; }

std::shared_ptr<const sim::Scene> load_scene(const char* scenario) {
  require(scenario, "scenario");
  return sim::load_scenario(session::scenario_path(scenario)).scene;
}

json report_json(const station::MissionReport& r) {
  json logs = json::array();
  for (const auto& l : r.logs) logs.push_back(l.to_json());
  json answers = r.answers;
  return {{"instruction", r.instruction},
          {"succeeded", r.succeeded},
          {"final_state", mission::to_string(r.final_phase)},
          {"attempts", r.attempts},
          {"replans", std::max(0, r.attempts - 1)},
          {"ticks", r.ticks},
          {"path_length", r.path_length},
          {"min_clearance", r.min_clearance ? json(*r.min_clearance) : json(nullptr)},
          {"answers", answers},
          {"logs", logs}};
}

void wait_stop(double duration_s, const std::atomic<bool>& done) {
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration_s);
  while (!g_stop && !done) {
    if (duration_s > 0 && std::chrono::steady_clock::now() >= until) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace

extern "C" {

const char* airstar_version(void) { return "0.1.0"; }

const char* airstar_last_error(void) { return g_last_error.c_str(); }

const char* airstar_status_name(int status) {
  if (status == AIRSTAR_E_INTERNAL) return "Internal";
  if (status < 0 || status > static_cast<int>(ErrorCode::kIllegalTransition)) return "Unknown";
  static thread_local std::string name;
  name = std::string(to_string(static_cast<ErrorCode>(status)));
  return name.c_str();
}

void airstar_string_free(char* s) { std::free(s); }

int airstar_config_load(const char* path, airstar_config** out) {
  return guarded([&] {
    require(out, "out");
    auto c = std::make_unique<airstar_config>();
    c->cfg = config::load(path != nullptr ? std::optional<std::string>(path) : std::nullopt);
    *out = c.release();
  });
}

int airstar_config_resolve_path(const char* path, char** out) {
  return guarded([&] {
    require(out, "out");
    const auto p = config::resolve_path(path != nullptr ? std::optional<std::string>(path) : std::nullopt);
    *out = dup(p.value_or(""));
  });
}

int airstar_config_to_json(const airstar_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup(config::to_json(cfg->cfg).dump(2));
  });
}

void airstar_config_free(airstar_config* cfg) { delete cfg; }

int airstar_session_open(const char* scenario, const airstar_config* cfg, int64_t seed, const char* record_path,
                         airstar_line_cb listener, void* user, airstar_session** out) {
  return guarded([&] {
    require(out, "out");
    session::Options opt;
    if (seed >= 0) opt.seed = static_cast<std::uint64_t>(seed);
    if (record_path != nullptr) opt.record_path = record_path;
    auto s = std::make_unique<airstar_session>();
    s->listener.cb = listener;
    s->listener.user = user;
    s->s = std::make_unique<session::Session>(load_scene(scenario), cfg_or_default(cfg), opt,
                                              listener != nullptr ? &s->listener : nullptr);
    *out = s.release();
  });
}

int airstar_session_run_mission(airstar_session* s, const char* text, char** report) {
  return guarded([&] {
    require(s, "session");
    require(text, "text");
    const station::MissionReport r = s->s->run(text);
    if (report != nullptr) *report = dup(report_json(r).dump());
  });
}

const char* airstar_session_phase(const airstar_session* s) {
  if (s == nullptr) return "";
  return mission::to_string(s->s->station().machine().phase());
}

void airstar_session_close(airstar_session* s) { delete s; }

int airstar_replay(const char* record_path, int realtime, double speed, airstar_line_cb cb, void* user) {
  return guarded([&] {
    require(record_path, "record_path");
    require(reinterpret_cast<const void*>(cb), "cb");
    LineSink sink;
    sink.cb = cb;
    sink.user = user;
    session::replay(session::read_record(record_path), sink, realtime != 0, speed);
  });
}

int airstar_replay_serve(const char* record_path, const char* scenario, const char* host, int port, double speed) {
  return guarded([&] {
    require(record_path, "record_path");
    const auto messages = session::read_record(record_path);
    const auto scene = load_scene(scenario);
    const config::Config defaults;
    server::Server srv(host != nullptr ? host : defaults.host, port >= 0 ? port : defaults.port,
                       sim::scenario_to_json(*scene).dump(), {});
    srv.start();
    std::cerr << "replay on ws://" << (host != nullptr ? host : defaults.host) << ":" << srv.port() << "/ws\n";
    g_stop = false;
    // Waits for a first client so the replay is not spent on an empty room.
    while (!g_stop && srv.client_count() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (!g_stop) session::replay(messages, srv.hub(), true, speed);
    srv.stop();
  });
}

int airstar_eval(const char* suite, const airstar_config* cfg, char** report, char** table) {
  return guarded([&] {
    require(suite, "suite");
    require(report, "report_json");
    const json r = session::evaluate(session::load_suite(suite), cfg_or_default(cfg));
    *report = dup(r.dump(2));
    if (table != nullptr) *table = dup(session::format_report(r));
  });
}

int airstar_serve(const char* mode, const char* scenario, const airstar_config* cfg, const char* host, int port,
                  const char* record_path, int64_t seed, double duration_s) {
  return guarded([&] {
    require(mode, "mode");
    const config::Config c = cfg_or_default(cfg);
    const auto scene = load_scene(scenario);
    runtime::ServeOptions opt;
    opt.host = host != nullptr && *host != '\0' ? host : c.host;
    opt.port = port >= 0 ? port : c.port;
    if (record_path != nullptr) opt.record_path = record_path;
    if (seed >= 0) opt.seed = static_cast<std::uint64_t>(seed);
    const std::string m = mode;
    if (m != "combined" && m != "station" && m != "onboard") {
      fail(ErrorCode::kInvalidArgument, "mode must be combined, station or onboard, not '" + m + "'");
    }
    g_stop = false;
    std::atomic<bool> stop{false};
    std::atomic<bool> done{false};
    std::exception_ptr err;
    std::thread worker([&] {
      try {
        auto ready = [&](int p) { std::cerr << "serving " << m << " on http://" << opt.host << ":" << p << "\n"; };
        if (m == "combined") {
          runtime::serve_combined(scene, c, opt, stop, ready);
        } else if (m == "station") {
          runtime::serve_station(scene, c, opt, stop, ready);
        } else {
          std::cerr << "onboard linking to ws://" << opt.host << ":" << opt.port << "/link\n";
          runtime::run_onboard(scene, c, opt.host, opt.port, opt.seed, stop);
        }
      } catch (...) {
        err = std::current_exception();
      }
      done = true;
    });
    wait_stop(duration_s, done);
    stop = true;
    worker.join();
    if (err) std::rethrow_exception(err);
  });
}

void airstar_request_stop(void) { g_stop = true; }

}  // extern "C"
