#pragma once

#include <string>
#include <string_view>

namespace sega {

// Hex MD5 digest of the given bytes. MD5 is used as a content fingerprint
// for determinism counting and prompt identity, not for security.
std::string md5_hex(std::string_view data);

}  // namespace sega
