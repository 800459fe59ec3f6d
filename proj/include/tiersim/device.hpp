#pragma once

// First-order service-time model for the cache device (SSD) and the lower
// level (HDD): sequential ops are throughput-bound, random ops IOPS-bound,
// plus a fixed per-request overhead. Times are microseconds.

#include <stdexcept>
#include <string>

#include "tiersim/json_util.hpp"

namespace tiersim {

enum class Direction { read, write };

inline const char* to_string(Direction d) {
    return d == Direction::read ? "read" : "write";
}

struct DeviceProfile {
    double seq_read_MBps = 0.0;
    double seq_write_MBps = 0.0;
    double rand_read_IOPS = 0.0;
    double rand_write_IOPS = 0.0;
    double per_request_overhead_us = 0.0;
    unsigned block_size_bytes = 8192;

    void validate() const {
        if (seq_read_MBps <= 0.0 || seq_write_MBps <= 0.0 || rand_read_IOPS <= 0.0 ||
            rand_write_IOPS <= 0.0)
            throw std::invalid_argument("device profile: all rates must be > 0");
        if (per_request_overhead_us < 0.0)
            throw std::invalid_argument("device profile: negative overhead");
        if (block_size_bytes == 0 || (block_size_bytes & (block_size_bytes - 1)) != 0)
            throw std::invalid_argument("device profile: block size must be a power of two");
    }

    // Intel 320 series numbers; the usual first-level device.
    static DeviceProfile default_ssd() {
        DeviceProfile p;
        p.seq_read_MBps = 270.0;
        p.seq_write_MBps = 205.0;
        p.rand_read_IOPS = 39500.0;
        p.rand_write_IOPS = 23000.0;
        return p;
    }

    // Representative 15K RPM drive; config-overridable.
    static DeviceProfile default_hdd() {
        DeviceProfile p;
        p.seq_read_MBps = 150.0;
        p.seq_write_MBps = 150.0;
        p.rand_read_IOPS = 200.0;
        p.rand_write_IOPS = 200.0;
        return p;
    }
};

struct DeviceOp {
    Direction direction = Direction::read;
    bool sequential = false;
    unsigned blocks = 1;
};

inline double service_time_us(const DeviceProfile& profile, const DeviceOp& op) {
    if (op.blocks == 0)
        throw std::invalid_argument("service_time: zero blocks");
    if (op.sequential) {
        double mbps = op.direction == Direction::read ? profile.seq_read_MBps
                                                      : profile.seq_write_MBps;
        double bytes = static_cast<double>(op.blocks) * profile.block_size_bytes;
        return profile.per_request_overhead_us + bytes / mbps; // bytes / (MB/s) == us
    }
    double iops = op.direction == Direction::read ? profile.rand_read_IOPS
                                                  : profile.rand_write_IOPS;
    return profile.per_request_overhead_us + static_cast<double>(op.blocks) * 1e6 / iops;
}

inline DeviceProfile device_profile_from_json(const json& j) {
    detail::expect_keys(j,
                        {"seq_read_MBps", "seq_write_MBps", "rand_read_IOPS", "rand_write_IOPS",
                         "per_request_overhead_us", "block_size_bytes"},
                        "device profile");
    DeviceProfile p;
    p.seq_read_MBps = detail::require(j, "seq_read_MBps", "device profile").get<double>();
    p.seq_write_MBps = detail::require(j, "seq_write_MBps", "device profile").get<double>();
    p.rand_read_IOPS = detail::require(j, "rand_read_IOPS", "device profile").get<double>();
    p.rand_write_IOPS = detail::require(j, "rand_write_IOPS", "device profile").get<double>();
    if (j.contains("per_request_overhead_us"))
        p.per_request_overhead_us = j.at("per_request_overhead_us").get<double>();
    if (j.contains("block_size_bytes"))
        p.block_size_bytes = j.at("block_size_bytes").get<unsigned>();
    p.validate();
    return p;
}

inline json device_profile_to_json(const DeviceProfile& p) {
    return json{{"seq_read_MBps", p.seq_read_MBps},
                {"seq_write_MBps", p.seq_write_MBps},
                {"rand_read_IOPS", p.rand_read_IOPS},
                {"rand_write_IOPS", p.rand_write_IOPS},
                {"per_request_overhead_us", p.per_request_overhead_us},
                {"block_size_bytes", p.block_size_bytes}};
}

} // namespace tiersim
