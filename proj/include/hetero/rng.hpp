#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Deterministic value generation on top of std::mt19937. The standard
// distributions are implementation-defined, so identical seeds could give
// different datasets on different standard libraries; these fixed mappings
// are part of the documented file/data contract (docs/FORMATS.md).

namespace hetero {

/// Uniform double in [0, 1): next 32-bit draw scaled by 2^-32.
inline double uniform01(std::mt19937& rng) {
    return static_cast<double>(rng()) * 0x1p-32;
}

/// Uniform float in [lo, hi).
inline float uniform_float(std::mt19937& rng, float lo, float hi) {
    return static_cast<float>(lo + (static_cast<double>(hi) - lo) * uniform01(rng));
}

/// Standard normal via Box-Muller: z = sqrt(-2 ln u1) * cos(2 pi u2),
/// with u1 = (draw + 0.5) * 2^-32 (never zero) and u2 = draw * 2^-32.
inline double gaussian(std::mt19937& rng) {
    double u1 = (static_cast<double>(rng()) + 0.5) * 0x1p-32;
    double u2 = static_cast<double>(rng()) * 0x1p-32;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace hetero
