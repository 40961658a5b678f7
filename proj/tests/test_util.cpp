#include "doctest.h"
#include "nsb/cidr.hpp"
#include "nsb/util.hpp"

using namespace nsb;

TEST_CASE("iso8601 round trip") {
  const std::string text = "2023-10-01T00:22:41Z";
  int64_t t = util::parse_iso8601(text);
  CHECK(util::format_iso8601(t) == text);
  CHECK(util::parse_iso8601("2023-10-01T00:22:46Z") == t + 5);
  CHECK_THROWS_AS(util::parse_iso8601("yesterday"), ConfigError);
}

TEST_CASE("resource quantities") {
  CHECK(util::parse_cpu_quantity("4") == doctest::Approx(4.0));
  CHECK(util::parse_cpu_quantity("100m") == doctest::Approx(0.1));
  CHECK(util::parse_cpu_quantity("0.5") == doctest::Approx(0.5));
  CHECK(util::parse_mem_quantity("100MiB") == 100ull * 1024 * 1024);
  CHECK(util::parse_mem_quantity("8GiB") == 8ull * 1024 * 1024 * 1024);
  CHECK(util::parse_mem_quantity("512Ki") == 512ull * 1024);
  CHECK(util::parse_mem_quantity("1024") == 1024);
  CHECK_THROWS_AS(util::parse_mem_quantity("10parsecs"), ConfigError);
}

TEST_CASE("fixed formatting avoids negative zero") {
  CHECK(util::format_fixed1(400.0) == "400.0");
  CHECK(util::format_fixed1(-0.0001) == "0.0");
  CHECK(util::format_fixed3(3.2361) == "3.236");
}

TEST_CASE("cidr parse and slice") {
  auto super = cidr::parse("2001:db8:100::/48");
  CHECK(super.v6);
  CHECK(super.prefix_len == 48);

  // first /126 slice: 2001:db8:100::/126, loopback ::3
  auto s0 = cidr::slice(super, 126, 0);
  CHECK(s0.to_string() == "2001:db8:100::/126");
  CHECK(s0.address_string(s0.last_address()) == "2001:db8:100::3");

  auto s1 = cidr::slice(super, 126, 1);
  CHECK(s1.to_string() == "2001:db8:100::4/126");
  CHECK(s1.address_string(s1.last_address()) == "2001:db8:100::7");

  // one node, /127 slice from ::/64 -> loopback ::1
  auto super64 = cidr::parse("::/64");
  auto s = cidr::slice(super64, 127, 0);
  CHECK(s.address_string(s.last_address()) == "::1");
}

TEST_CASE("cidr exhaustion: 2^(126-124) = 4 slices") {
  auto super = cidr::parse("2001:db8::/124");
  CHECK(cidr::slice_capacity(super, 126) == 4);
  for (uint64_t k = 0; k < 4; ++k) CHECK_NOTHROW(cidr::slice(super, 126, k));
  CHECK_THROWS_WITH_AS(cidr::slice(super, 126, 4),
                       doctest::Contains("only 4"), std::out_of_range);
}

TEST_CASE("ipv4 cidr") {
  auto super = cidr::parse("10.0.0.0/24");
  CHECK_FALSE(super.v6);
  auto s2 = cidr::slice(super, 30, 2);
  CHECK(s2.to_string() == "10.0.0.8/30");
  CHECK(s2.address_string(s2.last_address()) == "10.0.0.11");
}
