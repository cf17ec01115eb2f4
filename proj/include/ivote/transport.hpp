#pragma once

#include <memory>
#include <string>

#include "ivote/messages.hpp"
#include "ivote/server.hpp"

namespace ivote {

// Byte-level request channel. Everything above it exchanges single lines
// of JSON, so an interception point sees exactly what a socket would carry.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string post_line(const std::string& line) = 0;

  WireResponse post(const Envelope& env);
};

class InProcessTransport : public Transport {
 public:
  explicit InProcessTransport(Server& server) : server_(server) {}
  std::string post_line(const std::string& line) override {
    return server_.handle_line(line);
  }

 private:
  Server& server_;
};

}  // namespace ivote
