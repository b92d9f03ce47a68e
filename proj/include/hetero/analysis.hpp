#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hetero/ir.hpp"

// Static analyses over the kernel IR: validation, flop accounting, and
// transfer-size accounting. Validation is the gate every backend and the
// code generator rely on; a kernel that validates cleanly cannot fault on
// unknown identifiers or operand types.

namespace hetero {

enum class ViolationKind {
    UnknownIdentifier,
    DuplicateName,
    TypeMismatch,
    InBufferWrite,
    UnwrittenOutBuffer,
    DimensionMisuse,
    BadBufferElem,
    BadLength,
    LoopVarWrite,
    ParamWrite,
    NonFiniteLiteral,
    BadDims,
};

struct Violation {
    ViolationKind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

ValidationReport validate(const KernelDef& kernel);

struct AnalysisError : IrError {
    using IrError::IrError;
};

using ScalarBindings = std::map<std::string, Value, std::less<>>;

// Constant-folds an expression over literals and bound I32 scalars.
// Returns nullopt when the expression depends on buffers, work-item ids,
// F32 values, or unbound names.
std::optional<std::int32_t> eval_static_i32(const Expr& e, const ScalarBindings& params);

// Static count of F32 arithmetic node executions for one work item times
// the launch range. Counting rules: F32 add/sub/mul/div and F32 negation
// are 1 each, every math intrinsic is 1, comparisons and conversions are 0.
// A loop contributes bound-expression cost once plus trip count times its
// body; an if contributes its condition plus the more expensive branch.
std::int64_t flops_measure(const KernelDef& kernel, const LaunchRange& range,
                           const ScalarBindings& params = {});

struct TransferBytes {
    std::int64_t host_to_device = 0;
    std::int64_t device_to_host = 0;
};

// Depends only on buffer declarations: IN and INOUT move host-to-device,
// OUT and INOUT move device-to-host, 4 bytes per element.
TransferBytes bytes_transferred(const KernelDef& kernel);

// Trip count of the deepest nested loop, resolved against `params`; the
// minimum is taken when several loops share the maximal depth. Returns 1
// for kernels without loops. Used by the accelerator timing model as the
// ceiling on useful unrolling.
std::int64_t innermost_trip_count(const KernelDef& kernel, const ScalarBindings& params = {});

}  // namespace hetero
