#include "inkwell/digest.hpp"

#include <array>
#include <cstdio>

#include <openssl/sha.h>

namespace inkwell {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md.data());
  std::string out;
  out.reserve(2 * md.size());
  char buf[3];
  for (unsigned char b : md) {
    std::snprintf(buf, sizeof(buf), "%02x", b);
    out += buf;
  }
  return out;
}

}  // namespace inkwell
