#include "nsb/util.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>

namespace nsb {
namespace util {

int64_t parse_iso8601(const std::string& text) {
  std::tm tm{};
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2dZ", &y, &mo, &d, &h,
                  &mi, &s) != 6) {
    throw ConfigError("bad ISO-8601 timestamp: " + text);
  }
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  return static_cast<int64_t>(timegm(&tm));
}

std::string format_iso8601(int64_t unix_seconds) {
  std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

double parse_cpu_quantity(const std::string& text) {
  if (text.empty()) throw ConfigError("empty cpu quantity");
  if (text.back() == 'm') {
    return std::stod(text.substr(0, text.size() - 1)) / 1000.0;
  }
  return std::stod(text);
}

uint64_t parse_mem_quantity(const std::string& text) {
  if (text.empty()) throw ConfigError("empty memory quantity");
  size_t pos = 0;
  double value = std::stod(text, &pos);
  std::string suffix = text.substr(pos);
  if (!suffix.empty() && suffix.back() == 'B') suffix.pop_back();
  double mult = 1.0;
  if (suffix == "Ki") {
    mult = 1024.0;
  } else if (suffix == "Mi") {
    mult = 1024.0 * 1024.0;
  } else if (suffix == "Gi") {
    mult = 1024.0 * 1024.0 * 1024.0;
  } else if (suffix == "Ti") {
    mult = 1024.0 * 1024.0 * 1024.0 * 1024.0;
  } else if (!suffix.empty()) {
    throw ConfigError("bad memory quantity: " + text);
  }
  return static_cast<uint64_t>(std::llround(value * mult));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string format_fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  // avoid "-0.0"
  if (std::string(buf) == "-0.0") return "0.0";
  return buf;
}

std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  if (std::string(buf) == "-0.000") return "0.000";
  return buf;
}

}  // namespace util
}  // namespace nsb
