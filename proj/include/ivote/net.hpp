#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "ivote/transport.hpp"

namespace ivote::net {

// Minimal blocking TCP helpers for the line-delimited JSON transport.
// All listeners bind 127.0.0.1; port 0 picks an ephemeral port.

int tcp_listen(std::uint16_t& port);
int tcp_connect(const std::string& host, std::uint16_t port,
                double timeout_s = 5.0);
bool write_line(int fd, const std::string& line);
bool read_line(int fd, std::string& line);
void close_fd(int fd);

// Serves a Server over a listening socket, one thread per connection.
class SocketServer {
 public:
  explicit SocketServer(Server& server);
  ~SocketServer();

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void accept_loop();

  Server& server_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::vector<std::thread> conn_threads_;
  std::mutex conn_mu_;
};

// Client side of the socket transport. One connection per transport.
class SocketTransport : public Transport {
 public:
  SocketTransport(const std::string& host, std::uint16_t port);
  ~SocketTransport() override;

  std::string post_line(const std::string& line) override;

 private:
  int fd_ = -1;
};

}  // namespace ivote::net
