#ifndef NSB_UTIL_HPP
#define NSB_UTIL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsb {

// Raised when a configuration file or field is invalid or incomplete.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace util {

// Parses "2023-10-01T00:22:41Z" into seconds since the Unix epoch.
int64_t parse_iso8601(const std::string& text);

// Formats seconds since the Unix epoch as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(int64_t unix_seconds);

// Kubernetes-style cpu quantity: "4" -> 4.0, "100m" -> 0.1, "0.5" -> 0.5.
double parse_cpu_quantity(const std::string& text);

// Memory quantity with binary suffixes: "8GiB" -> bytes, "100MiB", "512Ki",
// or a plain byte count.
uint64_t parse_mem_quantity(const std::string& text);

std::vector<std::string> split(const std::string& s, char sep);

// Fixed one-decimal formatting used by the epoch serializer ("400.0").
std::string format_fixed1(double v);

std::string format_fixed3(double v);

}  // namespace util
}  // namespace nsb

#endif
