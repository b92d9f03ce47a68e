#pragma once

#include <cstdint>
#include <string>

#include "hetero/backend.hpp"

// Offload decision rule and the reconstructed energy/savings model. Savings
// compare one unit of baseline busy time on the CPU-only system against the
// same work finished S times faster on the CPU+FPGA system, with each system
// idling a fraction f of its own wall clock:
//
//   E_cpu = jtp_active + idle_cpu_only * f/(1-f)
//   E_acc = (fpga_active + idle_with_fpga * f/(1-f)) / S
//   savings% = 100 * (1 - E_acc / E_cpu)

namespace hetero {

struct PowerTable {
    std::string system_name;
    double shutdown_W = 0;
    double idle_cpu_only_W = 0;
    double idle_with_fpga_W = 0;
    double jtp_active_W = 0;   // CPU-only system at max utilization
    double fpga_active_W = 0;  // CPU+FPGA system during accelerator runs

    bool valid() const;
};

struct SavingsQuery {
    double speedup = 1;        // S > 0
    double idle_fraction = 0;  // 0 <= f < 1
};

struct OffloadPolicy {
    double complexity_threshold = 2.0e8;  // product measure (N*K*D)
};

enum class Placement { Host, Accelerator };

const char* to_string(Placement p);

/// Percent energy saved by the accelerated system; negative when the
/// accelerator costs more. Throws std::invalid_argument on S <= 0 or
/// f outside [0, 1).
double energy_savings(const PowerTable& table, const SavingsQuery& q);

/// Idle cost of having the accelerator installed, in watts.
double idle_power_overhead(const PowerTable& table);

/// Accelerator iff complexity strictly exceeds the threshold; the boundary
/// stays on the host.
Placement offload_decide(const OffloadPolicy& policy, double complexity);

/// Modeled host_time / accel_time for a single launch with the given
/// workload, using the backend timing formulas. > 1 means offload wins.
/// `innermost_trip` caps the unroll gain; leave defaulted when unknown.
double predict_speedup(const DeviceProfile& profile, std::int64_t flops, std::int64_t bytes_h2d,
                       std::int64_t bytes_d2h, const CodegenOptions& opts,
                       std::int64_t innermost_trip = INT32_MAX);

PowerTable load_power_table(const std::string& path);
DeviceProfile load_device_profile(const std::string& path);

}  // namespace hetero
