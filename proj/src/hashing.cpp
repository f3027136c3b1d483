#include "tcal/hashing.hpp"

#include <array>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "tcal/core.hpp"

namespace tcal {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "sha256 digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string prompt_hash(std::string_view model_id, std::string_view prompt, std::string_view candidate) {
  return sha256_hex(
      fmt::format("{}:{}{}:{}{}:{}", model_id.size(), model_id, prompt.size(), prompt, candidate.size(), candidate));
}

}  // namespace tcal
