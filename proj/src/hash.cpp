#include "sega/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "sega/error.hpp"

namespace sega {

std::string md5_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_md5(),
                 nullptr) != 1) {
    raise(ErrorKind::environment, "MD5 digest unavailable in this OpenSSL build");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace sega
