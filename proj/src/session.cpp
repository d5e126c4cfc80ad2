#include "airstar/session.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "airstar/error.hpp"

namespace airstar::session {

using nlohmann::json;

Session::Session(std::shared_ptr<const sim::Scene> scene, config::Config cfg, Options opt,
                 station::ClientSink* sink) {
  sim::World world = sim::make_world(scene);
  if (opt.seed) world.rng.seed(*opt.seed);
  onboard_ = std::make_unique<onboard::Onboard>(std::move(world), cfg.onboard);
  port_ = std::make_unique<station::LockstepPort>(*onboard_);
  station::ClientSink* out = sink != nullptr ? sink : &null_;
  if (!opt.record_path.empty()) {
    recorder_ = std::make_unique<station::Recorder>(opt.record_path, sink);
    out = recorder_.get();
  }
  station::Backends backends = station::make_backends(cfg, *scene);
  kb::KnowledgeBase knowledge = open_knowledge(cfg);
  station_ = std::make_unique<station::Station>(std::move(scene), std::move(cfg), std::move(backends),
                                                std::move(knowledge), *port_, *out);
}

station::MissionReport Session::run(const std::string& text) {
  station_->takeoff();
  station_->acknowledge();
  return station_->run_mission(text);
}

kb::KnowledgeBase open_knowledge(const config::Config& cfg) {
  return cfg.knowledge_journal.empty() ? kb::KnowledgeBase() : kb::KnowledgeBase(cfg.knowledge_journal);
}

std::string scenario_path(const std::string& arg) {
  if (std::filesystem::exists(arg)) return arg;
  const std::string bundled = config::data_dir() + "/scenarios/" + arg + (arg.ends_with(".json") ? "" : ".json");
  if (std::filesystem::exists(bundled)) return bundled;
  fail(ErrorCode::kIoError, "no scenario file or bundled scenario named '" + arg + "'");
}

std::vector<wire::WireMessage> read_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open record " + path);
  std::vector<wire::WireMessage> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    try {
      out.push_back(wire::decode(line));
    } catch (const Error& e) {
      fail(ErrorCode::kDecodeError, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void replay(const std::vector<wire::WireMessage>& messages, station::ClientSink& sink, bool realtime, double speed) {
  const auto period = std::chrono::duration<double>(sim::kTickSeconds / std::max(speed, 1e-6));
  std::optional<std::uint64_t> first;
  const auto t0 = link::Clock::now();
  for (const auto& m : messages) {
    if (const auto* t = std::get_if<wire::Telemetry>(&m); t != nullptr && realtime) {
      if (!first) first = t->tick;
      const auto due = t0 + std::chrono::duration_cast<link::Clock::duration>(
                                period * static_cast<double>(t->tick - *first));
      std::this_thread::sleep_until(due);
    }
    if (const auto* e = std::get_if<wire::Event>(&m)) {
      wire::Event copy = *e;
      copy.replay = true;
      sink.publish(copy);
    } else {
      sink.publish(m);
    }
  }
}

Suite load_suite(const std::string& name_or_path) {
  std::string path = name_or_path;
  if (!std::filesystem::exists(path)) path = config::data_dir() + "/suites/" + name_or_path + ".json";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "no suite named '" + name_or_path + "'");
  Suite s;
  try {
    const json j = json::parse(in);
    s.name = j.value("name", std::filesystem::path(path).stem().string());
    for (const auto& c : j.at("cases")) {
      SuiteCase sc;
      sc.name = c.at("name").get<std::string>();
      sc.scenario = c.at("scenario").get<std::string>();
      sc.missions = c.at("missions").get<std::vector<std::string>>();
      s.cases.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchemaError, "suite " + path + ": " + e.what());
  }
  return s;
}

json evaluate(const Suite& suite, const config::Config& cfg) {
  json rows = json::array();
  int ok = 0;
  for (const auto& c : suite.cases) {
    auto scene = sim::load_scenario(scenario_path(c.scenario)).scene;
    Session session(scene, cfg);
    for (const auto& text : c.missions) {
      const station::MissionReport r = session.run(text);
      ok += r.succeeded ? 1 : 0;
      rows.push_back({{"case", c.name},
                      {"mission", text},
                      {"success", r.succeeded},
                      {"final_state", mission::to_string(r.final_phase)},
                      {"path_length", r.path_length},
                      {"min_clearance", r.min_clearance ? json(*r.min_clearance) : json(nullptr)},
                      {"replans", std::max(0, r.attempts - 1)},
                      {"ticks", r.ticks}});
    }
  }
  json summary = {{"missions", rows.size()}, {"succeeded", ok}};
  summary["success_rate"] = rows.empty() ? json(nullptr) : json(static_cast<double>(ok) / rows.size());
  return {{"suite", suite.name}, {"missions", rows}, {"summary", summary}};
}

std::string format_report(const json& report) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "case" << std::setw(9) << "success" << std::right << std::setw(10)
     << "path_m" << std::setw(12) << "clearance_m" << std::setw(9) << "replans" << std::setw(8) << "ticks"
     << "\n";
  for (const auto& r : report.at("missions")) {
    os << std::left << std::setw(20) << r.at("case").get<std::string>() << std::setw(9)
       << (r.at("success").get<bool>() ? "yes" : "no") << std::right << std::fixed << std::setprecision(1)
       << std::setw(10) << r.at("path_length").get<double>() << std::setw(12);
    if (r.at("min_clearance").is_null()) {
      os << "-";
    } else {
      os << std::setprecision(2) << r.at("min_clearance").get<double>();
    }
    os << std::setw(9) << r.at("replans").get<int>() << std::setw(8) << r.at("ticks").get<std::uint64_t>()
       << "\n";
  }
  const auto& s = report.at("summary");
  os << s.at("succeeded").get<int>() << "/" << s.at("missions").get<std::size_t>() << " missions succeeded\n";
  return os.str();
}

}  // namespace airstar::session
