#pragma once

#include <string>
#include <string_view>

namespace tcal {

std::string sha256_hex(std::string_view data);

/// Content hash of one scored continuation: SHA-256 over the length-prefixed
/// fields "<len>:<model_id><len>:<prompt><len>:<candidate>" (byte lengths in
/// decimal), lowercase hex.
std::string prompt_hash(std::string_view model_id, std::string_view prompt, std::string_view candidate);

}  // namespace tcal
