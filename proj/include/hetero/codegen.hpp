#pragma once

#include <optional>
#include <string>

#include "hetero/ir.hpp"

// OpenCL-C source emission plus the kernel variant transforms: loop
// unrolling (UL) on the IR, compute-unit replication (PU) as an emitted
// attribute, and the vendor auto-optimize variant (O3) as a marked source
// plus a simulator efficiency knob.

namespace hetero {

struct CodegenOptions {
    int unroll_factor = 1;   // UL, >= 1
    int compute_units = 1;   // PU, >= 1
    bool auto_opt = false;   // O3; when set, UL and PU stay 1

    static CodegenOptions o3() { return {1, 1, true}; }
    static CodegenOptions pu_ul(int pu, int ul) { return {ul, pu, false}; }

    /// "O3" or "<PU>PU-<UL>UL", e.g. "8PU-8UL".
    std::string variant_name() const;
    static std::optional<CodegenOptions> parse_variant(std::string_view s);

    bool valid() const {
        if (unroll_factor < 1 || compute_units < 1) return false;
        return !auto_opt || (unroll_factor == 1 && compute_units == 1);
    }
};

struct TransformError : IrError {
    using IrError::IrError;
};

struct CodegenError : IrError {
    using IrError::IrError;
};

/// Rewrites every counted loop into a main loop stepping `factor` iterations
/// (with `factor` inlined, index-substituted body copies) followed by a
/// remainder loop. Loop bounds must be built from integer literals, scalar
/// params, and integer arithmetic; anything else is a TransformError and the
/// input kernel is untouched. factor == 1 returns a structurally identical
/// kernel. Per-iteration operation order is preserved, so interpreting the
/// result is bit-identical to the input.
KernelDef unroll(const KernelDef& kernel, int factor);

/// Emits a self-contained OpenCL-C kernel. Deterministic: identical inputs
/// give byte-identical source. Throws CodegenError if the kernel does not
/// validate or the options are inconsistent.
std::string emit_opencl(const KernelDef& kernel, const CodegenOptions& opts);

}  // namespace hetero
