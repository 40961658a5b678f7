#ifndef NSB_CIDR_HPP
#define NSB_CIDR_HPP

#include <cstdint>
#include <string>

namespace nsb {
namespace cidr {

// IPv4/IPv6 prefix with enough arithmetic to carve consecutive equal-size
// subnets out of a super-CIDR and pick the numerically last address.
struct Cidr {
  unsigned __int128 base = 0;  // network address, host order
  int prefix_len = 0;          // bits
  bool v6 = true;

  int address_bits() const { return v6 ? 128 : 32; }
  // number of addresses in the block; saturates at max for /0 v6
  unsigned __int128 size() const;
  unsigned __int128 last_address() const { return base + (size() - 1); }

  std::string to_string() const;           // "2001:db8::/48" or "10.0.0.0/24"
  std::string address_string(unsigned __int128 addr) const;
};

Cidr parse(const std::string& text);

// k-th consecutive subnet of length slice_prefix inside super.
// Throws std::out_of_range when the super-CIDR is exhausted; the message
// states how many slices fit.
Cidr slice(const Cidr& super, int slice_prefix, uint64_t k);

// how many slice_prefix subnets fit in super
uint64_t slice_capacity(const Cidr& super, int slice_prefix);

}  // namespace cidr
}  // namespace nsb

#endif
