#pragma once

#include <string>

#include "hetero/ir.hpp"

// JSON form of the kernel IR (node-tagged tree). The exact field names are
// documented in docs/FORMATS.md and covered by round-trip tests; the CLI
// accepts kernels in this form.

namespace hetero {

struct JsonError : IrError {
    using IrError::IrError;
};

std::string kernel_to_json(const KernelDef& kernel);
KernelDef kernel_from_json(const std::string& text);

KernelDef load_kernel_json(const std::string& path);
void save_kernel_json(const KernelDef& kernel, const std::string& path);

}  // namespace hetero
