#include "ivote/transport.hpp"

#include "ivote/errors.hpp"

namespace ivote {

WireResponse Transport::post(const Envelope& env) {
  return WireResponse::from_line(post_line(env.to_line()));
}

}  // namespace ivote
