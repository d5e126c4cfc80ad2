#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "airstar/config.hpp"
#include "airstar/world.hpp"

namespace airstar::runtime {

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8765;            // 0: ephemeral
  std::string record_path;    // empty: no record
  std::optional<std::uint64_t> seed;
};

// Station and a real-time onboard loop in one process, joined by in-memory
// channels carrying the configured latency. Serves /ws and /scenario.
// Blocks until `stop` is set; `ready` receives the bound port.
void serve_combined(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const ServeOptions& opt,
                    const std::atomic<bool>& stop, const std::function<void(int)>& ready = {});

// Station tier only: the onboard tier connects to /link.
void serve_station(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const ServeOptions& opt,
                   const std::atomic<bool>& stop, const std::function<void(int)>& ready = {});

// Onboard tier only: 10 Hz loop linked to a station's /link, reconnecting as
// needed and holding position while the link is down.
void run_onboard(std::shared_ptr<const sim::Scene> scene, const config::Config& cfg, const std::string& host,
                 int port, std::optional<std::uint64_t> seed, const std::atomic<bool>& stop);

}  // namespace airstar::runtime
