#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hetero/analysis.hpp"
#include "hetero/codegen.hpp"
#include "hetero/interp.hpp"
#include "hetero/ir.hpp"

// Execution backends: SEQ (reference interpreter), JTP (parallel host
// workers over contiguous chunks), and SIM_ACCEL (the same interpreter
// behind a modeled accelerator: per-launch setup latency, PCIe transfer
// time, device throughput scaled by the variant knobs, 64-byte host buffer
// alignment, and strictly serialized dispatch). Functional results are
// identical across all three by construction.

namespace hetero {

struct BindingError : IrError {
    using IrError::IrError;
};

struct AlignmentError : IrError {
    using IrError::IrError;
};

/// Host-side buffer with explicit control over the base address alignment.
/// `offset` shifts the base off the requested alignment on purpose (used to
/// exercise the strict alignment path).
class HostBuffer {
public:
    HostBuffer(ScalarType elem, std::int64_t count, std::size_t alignment = 64,
               std::size_t offset = 0);

    // Copies re-run the placement with the same alignment/offset request:
    // absolute addresses change, the alignment contract does not.
    HostBuffer(const HostBuffer& other);
    HostBuffer& operator=(const HostBuffer& other);
    HostBuffer(HostBuffer&&) noexcept = default;
    HostBuffer& operator=(HostBuffer&&) noexcept = default;

    static HostBuffer from_f32(std::span<const float> data, std::size_t alignment = 64,
                               std::size_t offset = 0);
    static HostBuffer from_i32(std::span<const std::int32_t> data, std::size_t alignment = 64,
                               std::size_t offset = 0);

    ScalarType elem() const { return elem_; }
    std::int64_t count() const { return count_; }
    std::uintptr_t address() const { return reinterpret_cast<std::uintptr_t>(base_); }

    float* f32() { return reinterpret_cast<float*>(base_); }
    const float* f32() const { return reinterpret_cast<const float*>(base_); }
    std::int32_t* i32() { return reinterpret_cast<std::int32_t*>(base_); }
    const std::int32_t* i32() const { return reinterpret_cast<const std::int32_t*>(base_); }

    std::span<float> f32_span() { return {f32(), static_cast<size_t>(count_)}; }
    std::span<const float> f32_span() const { return {f32(), static_cast<size_t>(count_)}; }
    std::span<std::int32_t> i32_span() { return {i32(), static_cast<size_t>(count_)}; }
    std::span<const std::int32_t> i32_span() const { return {i32(), static_cast<size_t>(count_)}; }

    BufView view() const { return {elem_, const_cast<std::byte*>(base_), count_}; }

private:
    ScalarType elem_;
    std::int64_t count_;
    std::size_t req_align_;
    std::size_t req_offset_;
    std::vector<std::byte> storage_;
    std::byte* base_;
};

/// Copies `buf` into storage whose base address is 0 mod `alignment`
/// (power of two). Already-aligned input passes through unchanged.
HostBuffer align_host_buffer(HostBuffer buf, std::size_t alignment);

/// Simulated accelerator timing parameters. The timing numbers are model
/// calibration values, not hardware measurements.
struct DeviceProfile {
    std::string name;
    double setup_latency_s = 0;      // fixed per-launch overhead
    double pcie_bandwidth_Bps = 1;   // host <-> device transfer rate
    double device_flops_per_s = 1;   // base modeled device throughput
    double host_flops_per_s = 1;     // modeled throughput of one host worker
    double o3_efficiency = 1;        // parallelism multiplier in the O3 variant
    std::int64_t alignment_bytes = 64;
    int max_parallel_units = 1;      // cap on effective PU

    bool valid() const;
};

struct ExecutionStats {
    double wall_time_s = 0;
    double modeled_compute_s = 0;   // SIM_ACCEL only; 0 on SEQ/JTP
    double modeled_transfer_s = 0;  // SIM_ACCEL only (includes setup); 0 on SEQ/JTP
    std::int64_t flops = 0;         // static count from flops_measure
    std::int64_t bytes_h2d = 0;
    std::int64_t bytes_d2h = 0;
    double modeled_energy_J = 0;    // filled by the cost/power model

    double modeled_time_s() const { return modeled_compute_s + modeled_transfer_s; }
};

/// min(PU, max_parallel_units) * min(UL, innermost_trip), times
/// o3_efficiency for the O3 variant.
double effective_parallelism(const DeviceProfile& profile, const CodegenOptions& opts,
                             std::int64_t innermost_trip);

/// setup + bytes/bandwidth + flops / (device_rate * effective_parallelism).
double modeled_accel_time(const DeviceProfile& profile, std::int64_t flops, std::int64_t bytes_h2d,
                          std::int64_t bytes_d2h, const CodegenOptions& opts,
                          std::int64_t innermost_trip);

class SimAccelDevice;

struct Seq {};
struct Jtp {
    int workers = 1;
};
struct SimAccel {
    std::shared_ptr<SimAccelDevice> device;
};
using BackendChoice = std::variant<Seq, Jtp, SimAccel>;

std::string backend_name(const BackendChoice& b);

struct Bindings {
    std::vector<HostBuffer*> buffers;  // parallel to kernel.buffers
    std::vector<Value> scalars;        // parallel to kernel.scalars

    static Bindings for_kernel(const KernelDef& k);
    void set_buffer(const KernelDef& k, std::string_view name, HostBuffer* buf);
    void set_scalar(const KernelDef& k, std::string_view name, Value v);
};

/// Executes `kernel` over `range` on the chosen backend. OUT/INOUT results
/// land in the bound buffers. Throws BindingError on shape mismatches,
/// AlignmentError from a strict-mode accelerator, ExecFault on runtime
/// faults. The kernel must validate; opts.unroll_factor only affects the
/// accelerator timing model here (unrolling the IR is the caller's choice
/// and does not change results).
ExecutionStats execute(const KernelDef& kernel, Bindings& bindings, const LaunchRange& range,
                       const BackendChoice& backend, const CodegenOptions& opts = {});

struct Launch {
    const KernelDef* kernel = nullptr;
    Bindings* bindings = nullptr;
    LaunchRange range;
    CodegenOptions opts;
};

struct LaunchResult {
    bool ok = false;
    std::string error;
    ExecutionStats stats;
};

struct DeviceInterval {
    double wall_start_s = 0;
    double wall_end_s = 0;
    double modeled_start_s = 0;
    double modeled_end_s = 0;
};

/// One simulated accelerator board. The modeled device is not thread safe,
/// so every launch goes through a single dispatch lock: concurrent
/// submitters are admitted but their launches are totally ordered and the
/// device timeline never overlaps two kernels.
class SimAccelDevice {
public:
    enum class AlignMode { Auto, Strict };

    explicit SimAccelDevice(DeviceProfile profile, AlignMode mode = AlignMode::Auto);

    const DeviceProfile& profile() const { return profile_; }
    AlignMode align_mode() const { return mode_; }

    ExecutionStats launch(const KernelDef& kernel, Bindings& bindings, const LaunchRange& range,
                          const CodegenOptions& opts);

    /// Runs launches one at a time in submission order; a failed launch is
    /// reported in its slot without aborting the rest.
    std::vector<LaunchResult> submit_serialized(std::span<Launch> launches);

    std::vector<DeviceInterval> timeline() const;
    double modeled_clock_s() const;

private:
    DeviceProfile profile_;
    AlignMode mode_;
    mutable std::mutex dispatch_;
    double modeled_clock_ = 0;
    std::vector<DeviceInterval> timeline_;
    double epoch_;
};

}  // namespace hetero
