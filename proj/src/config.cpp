#include "airstar/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "airstar/error.hpp"

namespace airstar::config {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  fail(ErrorCode::kSchemaError, "config " + where + ": " + what);
}

// Reads known keys of one object, rejecting anything else.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) schema(where_, "must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) schema(where_, "unknown key '" + k + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) schema(where_, std::string(key) + " must be a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) schema(where_, std::string(key) + " must be an integer");
      if (std::is_unsigned_v<T> && it->get<std::int64_t>() < 0) {
        schema(where_, std::string(key) + " must be >= 0");
      }
    } else {
      if (!it->is_number()) schema(where_, std::string(key) + " must be a number");
    }
    out = it->get<T>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

Config from_json(const json& j) {
  Config c;
  Reader root(j, "root");
  if (const json* g = root.child("gains")) {
    Reader r(*g, "gains");
    r.get("k_yaw", c.onboard.track.k_yaw);
    r.get("k_pos", c.onboard.track.k_pos);
    r.get("lost_threshold", c.onboard.track.lost_threshold);
    r.get("track_v_max", c.onboard.track.v_max);
    r.get("k_goto", c.onboard.k_goto);
    r.get("k_heading", c.onboard.k_yaw);
    r.get("goto_tolerance", c.onboard.goto_tolerance);
    r.get("yaw_tolerance", c.onboard.yaw_tolerance);
    r.get("avoid_margin", c.onboard.avoid_margin);
    r.get("gesture_step", c.onboard.gesture_step);
  }
  if (const json* b = root.child("budgets")) {
    Reader r(*b, "budgets");
    r.get("geo_navigate", c.budgets.geo_navigate);
    r.get("object_navigate", c.budgets.object_navigate);
    r.get("search_qa", c.budgets.search_qa);
    r.get("return_to_user", c.budgets.return_to_user);
    r.get("frame_human", c.budgets.frame_human);
    r.get("gesture", c.budgets.gesture);
    r.get("announce_arrival", c.budgets.announce_arrival);
    r.get("track_default_seconds", c.budgets.track_default_seconds);
    r.get("gesture_session_default_seconds", c.budgets.gesture_session_default_seconds);
    r.get("duration_margin", c.budgets.duration_margin);
  }
  if (const json* m = root.child("mission")) {
    Reader r(*m, "mission");
    r.get("max_attempts", c.max_attempts);
    r.get("return_offset", c.return_offset);
    r.get("object_standoff", c.object_standoff);
    r.get("object_min_altitude", c.object_min_altitude);
    r.get("track_standoff", c.track_standoff);
    r.get("link_timeout_s", c.link_timeout_s);
  }
  if (const json* b = root.child("backends")) {
    Reader r(*b, "backends");
    r.get("planner_url", c.backends.planner_url);
    r.get("grounding_url", c.backends.grounding_url);
    r.get("scorer_url", c.backends.scorer_url);
    r.get("qa_url", c.backends.qa_url);
    r.get("timeout_s", c.backends.timeout_s);
  }
  if (const json* l = root.child("latency")) {
    Reader r(*l, "latency");
    r.get("mean_ms", c.latency.mean_ms);
    r.get("jitter_ms", c.latency.jitter_ms);
  }
  root.get("knowledge_journal", c.knowledge_journal);
  root.get("prompt_template", c.prompt_template);
  if (const json* s = root.child("server")) {
    Reader r(*s, "server");
    r.get("host", c.host);
    r.get("port", c.port);
  }
  if (c.max_attempts < 1) schema("mission", "max_attempts must be >= 1");
  if (c.latency.mean_ms < 0 || c.latency.jitter_ms < 0) schema("latency", "values must be >= 0");
  if (c.port < 0 || c.port > 65535) schema("server", "port out of range");
  return c;
}

json to_json(const Config& c) {
  const auto& g = c.onboard;
  const auto& b = c.budgets;
  return {
      {"gains",
       {{"k_yaw", g.track.k_yaw},
        {"k_pos", g.track.k_pos},
        {"lost_threshold", g.track.lost_threshold},
        {"track_v_max", g.track.v_max},
        {"k_goto", g.k_goto},
        {"k_heading", g.k_yaw},
        {"goto_tolerance", g.goto_tolerance},
        {"yaw_tolerance", g.yaw_tolerance},
        {"avoid_margin", g.avoid_margin},
        {"gesture_step", g.gesture_step}}},
      {"budgets",
       {{"geo_navigate", b.geo_navigate},
        {"object_navigate", b.object_navigate},
        {"search_qa", b.search_qa},
        {"return_to_user", b.return_to_user},
        {"frame_human", b.frame_human},
        {"gesture", b.gesture},
        {"announce_arrival", b.announce_arrival},
        {"track_default_seconds", b.track_default_seconds},
        {"gesture_session_default_seconds", b.gesture_session_default_seconds},
        {"duration_margin", b.duration_margin}}},
      {"mission",
       {{"max_attempts", c.max_attempts},
        {"return_offset", c.return_offset},
        {"object_standoff", c.object_standoff},
        {"object_min_altitude", c.object_min_altitude},
        {"track_standoff", c.track_standoff},
        {"link_timeout_s", c.link_timeout_s}}},
      {"backends",
       {{"planner_url", c.backends.planner_url},
        {"grounding_url", c.backends.grounding_url},
        {"scorer_url", c.backends.scorer_url},
        {"qa_url", c.backends.qa_url},
        {"timeout_s", c.backends.timeout_s}}},
      {"latency", {{"mean_ms", c.latency.mean_ms}, {"jitter_ms", c.latency.jitter_ms}}},
      {"knowledge_journal", c.knowledge_journal},
      {"prompt_template", c.prompt_template},
      {"server", {{"host", c.host}, {"port", c.port}}},
  };
}

Config load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchemaError, "config " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string data_dir() {
  if (const char* env = std::getenv("AIRSTAR_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return AIRSTAR_DATA_DIR;
}

std::optional<std::string> resolve_path(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return explicit_path;
  if (const char* env = std::getenv("AIRSTAR_CONFIG"); env != nullptr && *env != '\0') return std::string(env);
  const std::string bundled = data_dir() + "/config/airstar.json";
  if (std::filesystem::exists(bundled)) return bundled;
  return std::nullopt;
}

Config load(const std::optional<std::string>& explicit_path) {
  const auto path = resolve_path(explicit_path);
  return path ? load_file(*path) : Config{};
}

std::string prompt_template(const Config& c) {
  const std::string path = c.prompt_template.empty() ? data_dir() + "/prompts/planner.txt" : c.prompt_template;
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open prompt template " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace airstar::config
