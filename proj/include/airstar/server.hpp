#pragma once

#include <functional>
#include <memory>
#include <string>

#include "airstar/station.hpp"
#include "airstar/wire.hpp"

namespace airstar::server {

struct Handlers {
  // Client -> station messages from /ws.
  std::function<void(const wire::WireMessage&)> on_client;
  // Onboard -> station messages from /link; empty refuses /link upgrades.
  std::function<void(const wire::WireMessage&)> on_link;
};

// HTTP + WebSocket front of the station tier:
//   GET /scenario  active scenario JSON
//   /ws            NDJSON client stream (broadcast; telemetry and frame_meta
//                  are last-value-wins for slow consumers)
//   /link          onboard tier in station mode
class Server {
 public:
  // port 0 binds an ephemeral port. Throws IoError when binding fails.
  Server(const std::string& host, int port, std::string scenario_json, Handlers handlers);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const;
  // Broadcast sink for station -> client messages; safe from any thread.
  station::ClientSink& hub();
  void start(int threads = 1);
  void stop();
  // To the connected onboard link; false (dropped) when none is connected.
  bool send_link(const wire::WireMessage& m);
  std::size_t client_count() const;

  struct Impl;  // opaque; public so connection handlers can name it

 private:
  std::shared_ptr<Impl> impl_;
};

// Onboard side of /link: keeps reconnecting with backoff until stopped.
class LinkClient {
 public:
  LinkClient(std::string host, int port, std::function<void(const wire::WireMessage&)> on_message);
  ~LinkClient();
  LinkClient(const LinkClient&) = delete;
  LinkClient& operator=(const LinkClient&) = delete;

  void start();
  void stop();
  bool connected() const;
  // Dropped while disconnected.
  void send(const wire::WireMessage& m);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace airstar::server
