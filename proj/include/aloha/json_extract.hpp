#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aloha {

// The first balanced {...} substring of `text` that parses as a JSON object.
// Braces inside JSON strings are skipped, so chatty model output around the
// object is tolerated.
std::optional<std::string> extract_first_json_object(std::string_view text);

}  // namespace aloha
