#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hetero/backend.hpp"
#include "hetero/kernels.hpp"
#include "hetero/power.hpp"

// Benchmark harness: runs the standalone kernels across backends and
// variants, verifies cross-backend output equality before timing anything,
// and derives modeled speedup/savings from the cost model.

namespace hetero {

struct BenchError : IrError {
    using IrError::IrError;
};

struct BenchSizes {
    std::int64_t vecadd_n = 4096;
    std::int64_t mandel_w = 64, mandel_h = 64;
    std::int32_t mandel_max_iter = 256;
    std::int64_t bs_n = 4096;
    std::int64_t nbody_n = 64;
    int nbody_steps = 3;
    float nbody_dt = 0.01f;
    float nbody_eps = 1e-3f;

    /// Report-scale sizes (too slow to interpret in tests; used by the CLI
    /// when asked and by the modeled-workload descriptors).
    static BenchSizes report_defaults();
    /// Small sizes suitable for equality checks and smoke runs.
    static BenchSizes smoke();
};

/// Static workload descriptor used for what-if speedup queries: no
/// execution, just flop/byte accounting on the kernel at the given size.
struct WorkloadDescriptor {
    std::string benchmark;
    std::int64_t flops = 0;
    std::int64_t bytes_h2d = 0;
    std::int64_t bytes_d2h = 0;
    std::int64_t innermost_trip = 1;
};

WorkloadDescriptor describe_benchmark(const std::string& name, const BenchSizes& sizes);

/// The modeled Table-style workload set the shipped profiles are calibrated
/// against: mandelbrot 2048x2048x256, nbody 32768 bodies (one step), and a
/// deep black-scholes batch (2.5e8 options) standing in for the unknown
/// published batch size.
std::vector<WorkloadDescriptor> calibration_workloads();

struct BenchRow {
    std::string benchmark;
    std::string size;
    std::string backend;
    std::string variant;
    double wall_time_s = 0;
    double speedup_vs_seq = 1;
    ExecutionStats stats;
    double modeled_speedup = 0;      // SIM rows; predict_speedup at this size
    double modeled_savings_pct = 0;  // SIM rows with a power table, f = 0
};

struct BenchOptions {
    BenchSizes sizes = BenchSizes::smoke();
    std::vector<std::string> benchmarks = {"vecadd", "mandelbrot", "black-scholes", "nbody"};
    std::vector<BackendChoice> backends;  // SEQ reference always included
    std::vector<CodegenOptions> variants = {CodegenOptions{}};
    const PowerTable* power = nullptr;
    std::uint32_t seed = 1;
};

struct BenchReport {
    std::vector<BenchRow> rows;
};

/// Runs every (benchmark, backend, variant) combination. Every cell's
/// outputs are compared bitwise against the SEQ baseline before its timing
/// is recorded; a mismatch aborts with a differential dump in the message.
BenchReport run_suite(const BenchOptions& opts);

void write_report_csv(const BenchReport& report, const std::string& path);
void write_report_json(const BenchReport& report, const std::string& path);

/// Grayscale PGM of an escape-time grid, for eyeballing.
void write_mandel_pgm(std::span<const std::int32_t> counts, std::int64_t width,
                      std::int64_t height, std::int32_t max_iter, const std::string& path);

}  // namespace hetero
