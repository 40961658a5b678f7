#include "nsb/cidr.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

#include "nsb/util.hpp"

namespace nsb {
namespace cidr {

namespace {

unsigned __int128 parse_ipv4(const std::string& text) {
  unsigned a, b, c, d;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4 ||
      a > 255 || b > 255 || c > 255 || d > 255) {
    throw ConfigError("bad IPv4 address: " + text);
  }
  return (static_cast<unsigned __int128>(a) << 24) | (b << 16) | (c << 8) | d;
}

unsigned __int128 parse_ipv6(const std::string& text) {
  // groups before and after "::"
  std::vector<std::string> head, tail;
  bool has_gap = false;
  auto gap = text.find("::");
  if (gap != std::string::npos) {
    has_gap = true;
    std::string h = text.substr(0, gap);
    std::string t = text.substr(gap + 2);
    if (!h.empty()) head = util::split(h, ':');
    if (!t.empty()) tail = util::split(t, ':');
  } else {
    head = util::split(text, ':');
  }
  size_t total = head.size() + tail.size();
  if ((has_gap && total > 7) || (!has_gap && total != 8)) {
    throw ConfigError("bad IPv6 address: " + text);
  }
  std::array<uint16_t, 8> groups{};
  auto parse_group = [&](const std::string& g) -> uint16_t {
    if (g.empty() || g.size() > 4) throw ConfigError("bad IPv6 group in " + text);
    return static_cast<uint16_t>(std::stoul(g, nullptr, 16));
  };
  for (size_t i = 0; i < head.size(); ++i) groups[i] = parse_group(head[i]);
  for (size_t i = 0; i < tail.size(); ++i)
    groups[8 - tail.size() + i] = parse_group(tail[i]);
  unsigned __int128 v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 16) | groups[i];
  return v;
}

std::string format_ipv6(unsigned __int128 v) {
  std::array<uint16_t, 8> g{};
  for (int i = 7; i >= 0; --i) {
    g[i] = static_cast<uint16_t>(v & 0xffff);
    v >>= 16;
  }
  // longest zero run for "::" compression
  int best_start = -1, best_len = 0;
  for (int i = 0; i < 8;) {
    if (g[i] == 0) {
      int j = i;
      while (j < 8 && g[j] == 0) ++j;
      if (j - i > best_len) {
        best_len = j - i;
        best_start = i;
      }
      i = j;
    } else {
      ++i;
    }
  }
  std::string out;
  char buf[8];
  if (best_len < 2) best_start = -1;
  for (int i = 0; i < 8; ++i) {
    if (i == best_start) {
      out += (i == 0) ? "::" : ":";
      i += best_len - 1;
      if (i == 7) return out;
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%x", g[i]);
    out += buf;
    if (i != 7) out += ":";
  }
  return out;
}

std::string format_ipv4(unsigned __int128 v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u",
                static_cast<unsigned>((v >> 24) & 0xff),
                static_cast<unsigned>((v >> 16) & 0xff),
                static_cast<unsigned>((v >> 8) & 0xff),
                static_cast<unsigned>(v & 0xff));
  return buf;
}

}  // namespace

unsigned __int128 Cidr::size() const {
  int host_bits = address_bits() - prefix_len;
  if (host_bits >= 128) return ~static_cast<unsigned __int128>(0);
  return static_cast<unsigned __int128>(1) << host_bits;
}

std::string Cidr::to_string() const {
  return address_string(base) + "/" + std::to_string(prefix_len);
}

std::string Cidr::address_string(unsigned __int128 addr) const {
  return v6 ? format_ipv6(addr) : format_ipv4(addr);
}

Cidr parse(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) throw ConfigError("CIDR missing '/': " + text);
  std::string addr = text.substr(0, slash);
  int prefix = std::stoi(text.substr(slash + 1));
  Cidr c;
  c.v6 = addr.find(':') != std::string::npos;
  c.prefix_len = prefix;
  if (prefix < 0 || prefix > c.address_bits()) {
    throw ConfigError("bad prefix length in " + text);
  }
  c.base = c.v6 ? parse_ipv6(addr) : parse_ipv4(addr);
  int host_bits = c.address_bits() - prefix;
  if (host_bits < 128) {
    unsigned __int128 mask = (host_bits == 0)
                                 ? ~static_cast<unsigned __int128>(0)
                                 : ~((static_cast<unsigned __int128>(1) << host_bits) - 1);
    c.base &= mask;
  } else {
    c.base = 0;
  }
  return c;
}

uint64_t slice_capacity(const Cidr& super, int slice_prefix) {
  if (slice_prefix < super.prefix_len) return 0;
  int bits = slice_prefix - super.prefix_len;
  if (bits >= 64) return UINT64_MAX;
  return static_cast<uint64_t>(1) << bits;
}

Cidr slice(const Cidr& super, int slice_prefix, uint64_t k) {
  if (slice_prefix < super.prefix_len || slice_prefix > super.address_bits()) {
    throw ConfigError("slice prefix /" + std::to_string(slice_prefix) +
                      " does not fit in " + super.to_string());
  }
  uint64_t cap = slice_capacity(super, slice_prefix);
  if (k >= cap) {
    throw std::out_of_range("super-CIDR " + super.to_string() + " exhausted: only " +
                            std::to_string(cap) + " /" +
                            std::to_string(slice_prefix) + " subnets fit");
  }
  Cidr out;
  out.v6 = super.v6;
  out.prefix_len = slice_prefix;
  int host_bits = super.address_bits() - slice_prefix;
  out.base = super.base + (static_cast<unsigned __int128>(k) << host_bits);
  return out;
}

}  // namespace cidr
}  // namespace nsb
