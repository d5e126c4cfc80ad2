#include "airstar/runtime.hpp"

#include <thread>

#include "airstar/server.hpp"
#include "airstar/session.hpp"

namespace airstar::runtime {

namespace {

using Chan = link::Channel<wire::WireMessage>;

void wait(const std::atomic<bool>& stop) {
  while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
}

std::uint64_t seed_of(const sim::Scene& scene, const std::optional<std::uint64_t>& seed) {
  return seed.value_or(scene.seed);
}

// Station thread plus server; `extra` runs beside them until stop.
void host_station(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const ServeOptions& opt,
                  station::OnboardPort& port, server::Handlers handlers, station::Station*& out,
                  const std::atomic<bool>& stop, const std::function<void(int)>& ready,
                  const std::function<void(server::Server&)>& extra) {
  station::Station* st = nullptr;
  handlers.on_client = [&st](const wire::WireMessage& m) {
    if (st != nullptr) st->post(m);
  };
  server::Server srv(opt.host, opt.port, sim::scenario_to_json(*scene).dump(), std::move(handlers));
  std::unique_ptr<station::Recorder> recorder;
  station::ClientSink* sink = &srv.hub();
  if (!opt.record_path.empty()) {
    recorder = std::make_unique<station::Recorder>(opt.record_path, &srv.hub());
    sink = recorder.get();
  }
  station::Station station(scene, cfg, station::make_backends(cfg, *scene), session::open_knowledge(cfg), port,
                           *sink);
  st = &station;
  out = &station;
  srv.start(2);
  if (ready) ready(srv.port());
  std::thread mission([&] { station.serve(stop); });
  std::thread side;
  if (extra) side = std::thread([&] { extra(srv); });
  wait(stop);
  mission.join();
  if (side.joinable()) side.join();
  srv.stop();
  out = nullptr;
}

}  // namespace

void serve_combined(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const ServeOptions& opt,
                    const std::atomic<bool>& stop, const std::function<void(int)>& ready) {
  const std::uint64_t seed = seed_of(*scene, opt.seed);
  sim::World world = sim::make_world(scene);
  world.rng.seed(seed);
  onboard::Onboard ob(std::move(world), cfg.onboard);
  Chan to_onboard(link::LatencyModel(cfg.latency.mean_ms, cfg.latency.jitter_ms, seed));
  Chan from_onboard(link::LatencyModel(cfg.latency.mean_ms, cfg.latency.jitter_ms, seed + 1));
  station::ChannelPort port(to_onboard, from_onboard, cfg.link_timeout_s);
  onboard::OnboardRunner runner(ob, to_onboard, [&](const wire::WireMessage& m) { from_onboard.push(m); });
  runner.start();
  station::Station* st = nullptr;
  host_station(scene, cfg, opt, port, {}, st, stop, ready, {});
  runner.stop();
}

void serve_station(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const ServeOptions& opt,
                   const std::atomic<bool>& stop, const std::function<void(int)>& ready) {
  Chan to_onboard;
  Chan from_onboard;
  station::ChannelPort port(to_onboard, from_onboard, cfg.link_timeout_s);
  server::Handlers handlers;
  handlers.on_link = [&](const wire::WireMessage& m) { from_onboard.push(m); };
  station::Station* st = nullptr;
  host_station(scene, cfg, opt, port, std::move(handlers), st, stop, ready, [&](server::Server& srv) {
    while (!stop) {
      if (auto m = to_onboard.pop(std::chrono::milliseconds(100))) srv.send_link(*m);
    }
  });
}

void run_onboard(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const std::string& host,
                 int port, std::optional<std::uint64_t> seed, const std::atomic<bool>& stop) {
  sim::World world = sim::make_world(scene);
  world.rng.seed(seed_of(*scene, seed));
  onboard::Onboard ob(std::move(world), cfg.onboard);
  Chan inbox;
  server::LinkClient client(host, port, [&](const wire::WireMessage& m) {
    if (std::holds_alternative<wire::Setpoint>(m)) inbox.push(m);
  });
  onboard::OnboardRunner runner(ob, inbox, [&](const wire::WireMessage& m) { client.send(m); },
                                [&] { return client.connected(); });
  client.start();
  runner.start();
  wait(stop);
  runner.stop();
  client.stop();
}

}  // namespace airstar::runtime
