#pragma once

#include <cstdint>

#include "hetero/backend.hpp"
#include "hetero/ir.hpp"

// IR constructions of the standalone benchmark kernels (vector add,
// Mandelbrot escape time, Black-Scholes pricing, one NBody step) plus
// ready-to-run launches with seeded input data.

namespace hetero {

struct Viewport {
    float x0 = -2.0f;
    float y0 = -1.5f;
    float width = 3.0f;
    float height = 3.0f;
};

/// result[i] = inA[i] + inB[i] over n items.
KernelDef vecadd_kernel(std::int64_t n);

/// 2-D escape-time kernel: iterates z <- z^2 + c from z = 0 with escape
/// radius 2, writing the escape iteration (or max_iter) per pixel. Viewport
/// enters through the x0/y0/dx/dy scalars.
KernelDef mandelbrot_kernel(std::int64_t width, std::int64_t height, std::int32_t max_iter);

/// Closed-form European call/put prices from per-item S, X, T, r, sigma
/// buffers. The normal CDF uses the Abramowitz-Stegun 26.2.17 polynomial
/// (7-digit accuracy); coefficients are documented in docs/FORMATS.md.
KernelDef black_scholes_kernel(std::int64_t n);

/// One all-pairs gravity step (G = 1, softening eps, fixed j order) with
/// semi-implicit Euler: v' = v + a*dt, then x' = x + v'*dt. Reads the
/// previous state from IN buffers and writes OUT buffers, so work items
/// never observe each other's updates.
KernelDef nbody_step_kernel(std::int64_t n);

/// Nearest-centroid assignment for the aggregated K-Means map task: one
/// work item per point, squared Euclidean distance, lowest index wins ties.
KernelDef kmeans_map_kernel(std::int64_t n, std::int64_t k, std::int64_t d);

/// A kernel plus everything needed to launch it. Bindings are rebuilt on
/// demand because they hold raw pointers into `buffers`.
struct PreparedLaunch {
    KernelDef kernel;
    LaunchRange range;
    std::vector<HostBuffer> buffers;  // parallel to kernel.buffers
    std::vector<Value> scalars;       // parallel to kernel.scalars

    Bindings bindings();
};

PreparedLaunch prepare_vecadd(std::int64_t n, std::uint32_t seed);
PreparedLaunch prepare_mandelbrot(std::int64_t width, std::int64_t height, std::int32_t max_iter,
                                  const Viewport& view);
PreparedLaunch prepare_black_scholes(std::int64_t n, std::uint32_t seed);
PreparedLaunch prepare_nbody(std::int64_t n, float dt, float eps, std::uint32_t seed);

/// Copies the NBody OUT state into the IN buffers, readying the next step.
void nbody_advance(PreparedLaunch& nb);

}  // namespace hetero
