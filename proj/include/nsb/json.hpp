#ifndef NSB_JSON_HPP
#define NSB_JSON_HPP

#include <json.hpp>  // vendored nlohmann/json

namespace nsb {
// Key order matters for the emitted configuration and epoch files, so the
// ordered flavor is used everywhere.
using njson = nlohmann::ordered_json;
}  // namespace nsb

#endif
