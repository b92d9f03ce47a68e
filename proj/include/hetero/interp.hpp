#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include "hetero/ir.hpp"

// Reference interpreter. This is the semantic oracle: every backend executes
// kernels through it, so functional behaviour is identical across backends by
// construction and out-of-bounds buffer access is a hard runtime error, not
// undefined behaviour.

namespace hetero {

struct ExecFault : IrError {
    using IrError::IrError;
};

/// Untyped view of one bound buffer; `elem` says how to read `data`.
struct BufView {
    ScalarType elem;
    void* data;
    std::int64_t len;
};

class CompiledKernel {
public:
    // Kernel must have passed validate(); compile trusts it.
    explicit CompiledKernel(const KernelDef& kernel);
    ~CompiledKernel();
    CompiledKernel(CompiledKernel&&) noexcept;
    CompiledKernel& operator=(CompiledKernel&&) noexcept;

    /// Runs flattened work items [first, last). Items are linearized
    /// gid1-major: item = gid1 * g0 + gid0. Safe to call concurrently on
    /// disjoint item ranges as long as the kernel writes disjoint buffer
    /// slots per item (the IR has no cross-item communication).
    void run_items(std::span<const BufView> buffers, std::span<const Value> scalars,
                   const LaunchRange& range, std::int64_t first, std::int64_t last,
                   std::int64_t* f32_op_counter = nullptr) const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

/// Sequential interpretation of the whole range. The optional counter
/// accumulates dynamically executed F32 arithmetic operations (same
/// classification as flops_measure).
void interpret(const KernelDef& kernel, std::span<const BufView> buffers,
               std::span<const Value> scalars, const LaunchRange& range,
               std::int64_t* f32_op_counter = nullptr);

}  // namespace hetero
