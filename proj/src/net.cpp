#include "ivote/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "ivote/errors.hpp"

namespace ivote::net {

int tcp_listen(std::uint16_t& port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("bind() failed");
  }
  if (::listen(fd, 64) != 0) {
    ::close(fd);
    throw TransportError("listen() failed");
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    throw TransportError("getsockname() failed");
  }
  port = ntohs(addr.sin_port);
  return fd;
}

int tcp_connect(const std::string& host, std::uint16_t port, double timeout_s) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  timeval tv{};
  tv.tv_sec = static_cast<long>(timeout_s);
  tv.tv_usec = static_cast<long>((timeout_s - tv.tv_sec) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw TransportError("only dotted-quad hosts supported: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int err = errno;
    ::close(fd);
    throw TransportError(std::string("connect() failed: ") +
                         std::strerror(err));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

bool write_line(int fd, const std::string& line) {
  std::string framed = line;
  framed.push_back('\n');
  std::size_t sent = 0;
  while (sent < framed.size()) {
    ssize_t n = ::send(fd, framed.data() + sent, framed.size() - sent, 0);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool read_line(int fd, std::string& line) {
  line.clear();
  char c;
  while (true) {
    ssize_t n = ::recv(fd, &c, 1, 0);
    if (n <= 0) return false;
    if (c == '\n') return true;
    line.push_back(c);
    if (line.size() > (1u << 24)) return false;  // runaway frame
  }
}

void close_fd(int fd) {
  if (fd >= 0) ::close(fd);
}

SocketServer::SocketServer(Server& server) : server_(server) {
  listen_fd_ = tcp_listen(port_);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

SocketServer::~SocketServer() { stop(); }

void SocketServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard lock(conn_mu_);
  for (auto& t : conn_threads_)
    if (t.joinable()) t.join();
}

void SocketServer::accept_loop() {
  while (!stopping_) {
    int conn = ::accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) break;
    std::lock_guard lock(conn_mu_);
    conn_threads_.emplace_back([this, conn] {
      std::string line;
      while (read_line(conn, line)) {
        if (!write_line(conn, server_.handle_line(line))) break;
      }
      ::close(conn);
    });
  }
}

SocketTransport::SocketTransport(const std::string& host, std::uint16_t port) {
  fd_ = tcp_connect(host, port);
}

SocketTransport::~SocketTransport() { close_fd(fd_); }

std::string SocketTransport::post_line(const std::string& line) {
  if (!write_line(fd_, line)) throw TransportError("send failed");
  std::string resp;
  if (!read_line(fd_, resp)) throw TransportError("connection closed");
  return resp;
}

}  // namespace ivote::net
