#include <doctest.h>

#include "tiersim/device.hpp"

using namespace tiersim;

TEST_CASE("service time: sequential reads are throughput bound") {
    auto ssd = DeviceProfile::default_ssd();
    // 33 blocks of 8 KiB at 270 MB/s.
    double t = service_time_us(ssd, {Direction::read, true, 33});
    CHECK(t == doctest::Approx(33.0 * 8192.0 / 270.0).epsilon(1e-12));
    CHECK(t == doctest::Approx(1001.24).epsilon(1e-4));
}

TEST_CASE("service time: random ops are IOPS bound") {
    auto ssd = DeviceProfile::default_ssd();
    double t = service_time_us(ssd, {Direction::read, false, 1});
    CHECK(t == doctest::Approx(1e6 / 39500.0).epsilon(1e-12));
    CHECK(t == doctest::Approx(25.3165).epsilon(1e-4));
}

TEST_CASE("service time: zero blocks rejected") {
    auto ssd = DeviceProfile::default_ssd();
    CHECK_THROWS(service_time_us(ssd, {Direction::read, true, 0}));
}

TEST_CASE("profile validation: zero rates rejected at load") {
    json j = device_profile_to_json(DeviceProfile::default_ssd());
    j["rand_read_IOPS"] = 0.0;
    CHECK_THROWS(device_profile_from_json(j));
    json j2 = device_profile_to_json(DeviceProfile::default_hdd());
    j2["block_size_bytes"] = 3000; // not a power of two
    CHECK_THROWS(device_profile_from_json(j2));
    json j3 = device_profile_to_json(DeviceProfile::default_hdd());
    j3["spin_up_ms"] = 1.0; // unknown key
    CHECK_THROWS(device_profile_from_json(j3));
}

TEST_CASE("property: additive in blocks for random, linear for sequential") {
    auto hdd = DeviceProfile::default_hdd();
    for (unsigned n = 1; n <= 64; n *= 2) {
        double rn = service_time_us(hdd, {Direction::write, false, n});
        double r1 = service_time_us(hdd, {Direction::write, false, 1});
        CHECK(rn == doctest::Approx(n * r1).epsilon(1e-9));
        double sn = service_time_us(hdd, {Direction::read, true, n});
        double s1 = service_time_us(hdd, {Direction::read, true, 1});
        CHECK(sn == doctest::Approx(n * s1).epsilon(1e-9));
    }
}

TEST_CASE("default profiles: random SSD access beats HDD, sequential comparable") {
    auto ssd = DeviceProfile::default_ssd();
    auto hdd = DeviceProfile::default_hdd();
    CHECK(service_time_us(ssd, {Direction::read, false, 1}) <
          service_time_us(hdd, {Direction::read, false, 1}));
    CHECK(service_time_us(ssd, {Direction::write, false, 1}) <
          service_time_us(hdd, {Direction::write, false, 1}));
    // Same order of magnitude sequentially.
    double sr = service_time_us(ssd, {Direction::read, true, 100});
    double hr = service_time_us(hdd, {Direction::read, true, 100});
    CHECK(hr / sr < 10.0);
    CHECK(sr / hr < 10.0);
}

TEST_CASE("profiles round-trip through json") {
    auto p = DeviceProfile::default_ssd();
    auto q = device_profile_from_json(device_profile_to_json(p));
    CHECK(device_profile_to_json(q) == device_profile_to_json(p));
}
