#include <doctest.h>

#include <random>

#include "hetero/analysis.hpp"
#include "hetero/backend.hpp"
#include "hetero/interp.hpp"
#include "hetero/kernels.hpp"
#include "hetero/kmeans.hpp"
#include "hetero/rng.hpp"

using namespace hetero;
using namespace hetero::ir;

TEST_CASE("vecadd does one flop per work item") {
    KernelDef k = vecadd_kernel(1024);
    CHECK(flops_measure(k, {1024, 1}) == 1024);
}

TEST_CASE("loop flops multiply by the trip count") {
    // 10-iteration loop with 2 f32 ops per iteration, 100 work items
    KernelDef k;
    k.name = "loopy";
    k.buffers = {{"out", ScalarType::F32, 100, BufferDir::Out}};
    k.body = {
        decl("i", ScalarType::I32, global_id(0)),
        decl("acc", ScalarType::F32, lit_f32(0.0f)),
        for_loop("j", lit_i32(0), lit_i32(10),
                 {assign("acc", add(var("acc"), mul(lit_f32(1.5f), lit_f32(2.0f))))}),
        store("out", var("i"), var("acc")),
    };
    REQUIRE(validate(k).ok());
    CHECK(flops_measure(k, {100, 1}) == 2000);
}

TEST_CASE("kmeans map static flops is 3*n*k*d and matches the dynamic counter") {
    const std::int64_t n = 10000, kc = 100, d = 8;
    KernelDef k = kmeans_map_kernel(n, kc, d);
    ScalarBindings params{{"k", Value::i32(static_cast<std::int32_t>(kc))},
                          {"d", Value::i32(static_cast<std::int32_t>(d))}};
    std::int64_t static_count = flops_measure(k, {n, 1}, params);
    CHECK(static_count == 3 * n * kc * d);

    // dynamic count from an instrumented interpretation of a smaller instance
    const std::int64_t n2 = 200, kc2 = 7, d2 = 5;
    KernelDef k2 = kmeans_map_kernel(n2, kc2, d2);
    SyntheticData data = generate_synthetic(n2, kc2, d2, 42, 3.0f);
    PreparedLaunch launch = prepare_kmeans_map(data.points, data.true_centers);
    std::vector<BufView> views;
    for (auto& b : launch.buffers) views.push_back(b.view());
    std::int64_t dynamic_count = 0;
    interpret(k2, views, launch.scalars, launch.range, &dynamic_count);
    CHECK(dynamic_count == flops_measure(k2, {n2, 1},
                                         {{"k", Value::i32(kc2)}, {"d", Value::i32(d2)}}));
    CHECK(dynamic_count == 3 * n2 * kc2 * d2);
}

TEST_CASE("unresolvable loop bounds raise an analysis error") {
    KernelDef k;
    k.name = "unresolved";
    k.buffers = {{"out", ScalarType::F32, 8, BufferDir::Out}};
    k.scalars = {{"n", ScalarType::I32}};
    k.body = {
        decl("i", ScalarType::I32, global_id(0)),
        decl("acc", ScalarType::F32, lit_f32(0.0f)),
        for_loop("j", lit_i32(0), var("n"),
                 {assign("acc", add(var("acc"), lit_f32(1.0f)))}),
        store("out", var("i"), var("acc")),
    };
    REQUIRE(validate(k).ok());
    CHECK_THROWS_AS(flops_measure(k, {8, 1}, {}), AnalysisError);
    CHECK(flops_measure(k, {8, 1}, {{"n", Value::i32(4)}}) == 32);
}

TEST_CASE("flops are multiplicative in the launch range") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 4096);
        KernelDef k = black_scholes_kernel(n);
        std::int64_t one = flops_measure(k, {1, 1});
        CHECK(flops_measure(k, {n, 1}) == one * n);
        CHECK(flops_measure(k, {2 * n, 1}) == 2 * flops_measure(k, {n, 1}));
    }
}

TEST_CASE("vecadd transfer bytes: two IN buffers down, one OUT buffer up") {
    KernelDef k = vecadd_kernel(1024);
    TransferBytes t = bytes_transferred(k);
    CHECK(t.host_to_device == 8192);
    CHECK(t.device_to_host == 4096);
}

TEST_CASE("INOUT buffers count in both directions") {
    KernelDef k;
    k.name = "scale";
    k.buffers = {{"buf", ScalarType::F32, 16, BufferDir::InOut}};
    k.body = {
        decl("i", ScalarType::I32, global_id(0)),
        store("buf", var("i"), mul(index("buf", var("i")), lit_f32(2.0f))),
    };
    REQUIRE(validate(k).ok());
    TransferBytes t = bytes_transferred(k);
    CHECK(t.host_to_device == 64);
    CHECK(t.device_to_host == 64);
}

TEST_CASE("kmeans map transfers match a hand-summed ledger of its buffers") {
    const std::int64_t n = 1'000'000, kc = 40, d = 2;
    KernelDef k = kmeans_map_kernel(n, kc, d);
    // by hand: points n*d*4 down, centroids k*d*4 down, labels n*4 up
    std::int64_t down = n * d * 4 + kc * d * 4;
    std::int64_t up = n * 4;
    TransferBytes t = bytes_transferred(k);
    CHECK(t.host_to_device == down);
    CHECK(t.device_to_host == up);
}

TEST_CASE("transfer bytes do not depend on the launch range") {
    KernelDef k = black_scholes_kernel(512);
    TransferBytes a = bytes_transferred(k);
    (void)a;
    // bytes_transferred takes no range at all; spot-check stability across
    // equal declarations instead
    KernelDef k2 = black_scholes_kernel(512);
    CHECK(bytes_transferred(k2).host_to_device == bytes_transferred(k).host_to_device);
    CHECK(bytes_transferred(k2).device_to_host == bytes_transferred(k).device_to_host);
}

TEST_CASE("innermost trip count resolves nested loops") {
    KernelDef k = kmeans_map_kernel(10, 6, 4);
    ScalarBindings params{{"k", Value::i32(6)}, {"d", Value::i32(4)}};
    CHECK(innermost_trip_count(k, params) == 4);
    CHECK(innermost_trip_count(vecadd_kernel(8), {}) == 1);  // no loops
    CHECK(innermost_trip_count(mandelbrot_kernel(8, 8, 77), {}) == 77);
}

TEST_CASE("static i32 evaluation folds arithmetic over params") {
    ScalarBindings params{{"n", Value::i32(10)}};
    ExprPtr e = div(sub(var("n"), lit_i32(2)), lit_i32(4));
    CHECK(eval_static_i32(*e, params) == 2);
    CHECK_FALSE(eval_static_i32(*var("m"), params).has_value());
    CHECK_FALSE(eval_static_i32(*global_id(0), params).has_value());
    CHECK_FALSE(eval_static_i32(*div(var("n"), lit_i32(0)), params).has_value());
}
