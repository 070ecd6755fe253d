#include "pref/rng.hpp"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>

namespace pref {

std::string Rng::serialize() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "xoshiro256ss %016" PRIx64 " %016" PRIx64 " %016" PRIx64
                                  " %016" PRIx64,
                s_[0], s_[1], s_[2], s_[3]);
  return buf;
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng;
  char tag[32] = {};
  const int got = std::sscanf(text.c_str(), "%31s %" SCNx64 " %" SCNx64 " %" SCNx64 " %" SCNx64,
                              tag, &rng.s_[0], &rng.s_[1], &rng.s_[2], &rng.s_[3]);
  if (got != 5 || std::string(tag) != "xoshiro256ss")
    throw std::runtime_error("Rng::deserialize: malformed state string '" + text + "'");
  return rng;
}

}  // namespace pref
