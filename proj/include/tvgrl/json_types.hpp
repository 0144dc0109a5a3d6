#pragma once

#include <json.hpp>

namespace tvgrl {

// Record files keep their field order so emitted lines are stable and diffable.
using Json = nlohmann::ordered_json;

}  // namespace tvgrl
