#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "hetero/bench.hpp"
#include "hetero/kernels.hpp"
#include "hetero/power.hpp"
#include "hetero/rng.hpp"
#include "support/oracles.hpp"

using namespace hetero;

namespace {

void run_on_seq(PreparedLaunch& launch) {
    Bindings b = launch.bindings();
    execute(launch.kernel, b, launch.range, Seq{});
}

DeviceProfile quick_profile() {
    DeviceProfile p;
    p.name = "quick";
    p.setup_latency_s = 0.001;
    p.pcie_bandwidth_Bps = 1e9;
    p.device_flops_per_s = 1e9;
    p.host_flops_per_s = 1e9;
    p.o3_efficiency = 2.0;
    p.alignment_bytes = 64;
    p.max_parallel_units = 8;
    return p;
}

}  // namespace

TEST_CASE("the origin never escapes; far points escape immediately") {
    // single pixel centered on c = (0,0)
    PreparedLaunch origin = prepare_mandelbrot(1, 1, 250, {0.0f, 0.0f, 0.0f, 0.0f});
    run_on_seq(origin);
    CHECK(origin.buffers[0].i32()[0] == 250);

    // |c| = 3 > 2 escapes within two iterations
    PreparedLaunch far = prepare_mandelbrot(1, 1, 250, {3.0f, 0.0f, 0.0f, 0.0f});
    run_on_seq(far);
    CHECK(far.buffers[0].i32()[0] >= 1);
    CHECK(far.buffers[0].i32()[0] <= 2);
}

TEST_CASE("the 64x64 grid equals the scalar escape-time oracle bitwise") {
    const std::int64_t w = 64, h = 64;
    const std::int32_t max_iter = 256;
    Viewport view{-2.0f, -1.5f, 3.0f, 3.0f};
    PreparedLaunch launch = prepare_mandelbrot(w, h, max_iter, view);
    run_on_seq(launch);
    const float dx = view.width / static_cast<float>(w);
    const float dy = view.height / static_cast<float>(h);
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
            float cx = view.x0 + static_cast<float>(static_cast<std::int32_t>(x)) * dx;
            float cy = view.y0 + static_cast<float>(static_cast<std::int32_t>(y)) * dy;
            std::int32_t want = oracle::mandel_escape(cx, cy, max_iter);
            std::int32_t got = launch.buffers[0].i32()[y * w + x];
            REQUIRE(got == want);
        }
}

TEST_CASE("escape counts lie in [1, max_iter] and grow with max_iter") {
    Viewport view{-2.0f, -1.5f, 3.0f, 3.0f};
    PreparedLaunch a = prepare_mandelbrot(32, 32, 40, view);
    PreparedLaunch b = prepare_mandelbrot(32, 32, 160, view);
    run_on_seq(a);
    run_on_seq(b);
    for (std::int64_t i = 0; i < 32 * 32; ++i) {
        std::int32_t ca = a.buffers[0].i32()[i];
        std::int32_t cb = b.buffers[0].i32()[i];
        REQUIRE(ca >= 1);
        REQUIRE(ca <= 40);
        REQUIRE(cb >= ca);
    }
}

TEST_CASE("near-zero volatility reduces a call to discounted intrinsic value") {
    // one option: S=100, X=50, r=0.05, T=1, sigma -> 1e-7
    PreparedLaunch launch = prepare_black_scholes(1, 1);
    launch.buffers[0].f32()[0] = 100.0f;
    launch.buffers[1].f32()[0] = 50.0f;
    launch.buffers[2].f32()[0] = 1.0f;
    launch.buffers[3].f32()[0] = 0.05f;
    launch.buffers[4].f32()[0] = 1e-7f;
    run_on_seq(launch);
    double want = 100.0 - 50.0 * std::exp(-0.05);
    CHECK(std::abs(launch.buffers[0 + 5].f32()[0] - want) < 1e-2);
}

TEST_CASE("put-call parity holds within a relative 1e-3") {
    const std::int64_t n = 2048;
    PreparedLaunch launch = prepare_black_scholes(n, 99);
    run_on_seq(launch);
    for (std::int64_t i = 0; i < n; ++i) {
        double s = launch.buffers[0].f32()[i];
        double x = launch.buffers[1].f32()[i];
        double t = launch.buffers[2].f32()[i];
        double r = launch.buffers[3].f32()[i];
        double call = launch.buffers[5].f32()[i];
        double put = launch.buffers[6].f32()[i];
        double lhs = call - put;
        double rhs = s - x * std::exp(-r * t);
        REQUIRE(std::abs(lhs - rhs) <= 1e-3 * (std::abs(rhs) + 1.0));
    }
}

TEST_CASE("prices track the quadrature oracle within 5e-3 relative") {
    // the documented spot check plus a random batch
    PreparedLaunch one = prepare_black_scholes(1, 1);
    one.buffers[0].f32()[0] = 100.0f;
    one.buffers[1].f32()[0] = 100.0f;
    one.buffers[2].f32()[0] = 1.0f;
    one.buffers[3].f32()[0] = 0.05f;
    one.buffers[4].f32()[0] = 0.2f;
    run_on_seq(one);
    oracle::BsPrices want = oracle::black_scholes_reference(100, 100, 1, 0.05, 0.2);
    CHECK(std::abs(one.buffers[5].f32()[0] - want.call) <= 5e-3 * want.call);

    const std::int64_t n = 256;
    PreparedLaunch batch = prepare_black_scholes(n, 7);
    run_on_seq(batch);
    for (std::int64_t i = 0; i < n; ++i) {
        double s = batch.buffers[0].f32()[i];
        double x = batch.buffers[1].f32()[i];
        double t = batch.buffers[2].f32()[i];
        double r = batch.buffers[3].f32()[i];
        double v = batch.buffers[4].f32()[i];
        oracle::BsPrices ref = oracle::black_scholes_reference(s, x, t, r, v);
        // A&S 26.2.17 is good to ~7.5e-8 absolute in the CDF; price error
        // scales with S, so compare relative with an absolute floor.
        REQUIRE(std::abs(batch.buffers[5].f32()[i] - ref.call) <=
                5e-3 * (std::abs(ref.call) + 0.05));
        REQUIRE(std::abs(batch.buffers[6].f32()[i] - ref.put) <=
                5e-3 * (std::abs(ref.put) + 0.05));
    }
}

TEST_CASE("a single body drifts uniformly with zero acceleration") {
    PreparedLaunch launch = prepare_nbody(1, 0.5f, 1e-3f, 2);
    launch.buffers[0].f32()[0] = 1.0f;
    launch.buffers[4].f32()[0] = 2.0f;  // vx
    launch.buffers[5].f32()[0] = 0.0f;
    launch.buffers[6].f32()[0] = 0.0f;
    run_on_seq(launch);
    // self-interaction contributes 0 despite the softening (dx = 0)
    CHECK(launch.buffers[10].f32()[0] == doctest::Approx(2.0f));  // vx unchanged
    CHECK(launch.buffers[7].f32()[0] == doctest::Approx(1.0f + 2.0f * 0.5f));
}

TEST_CASE("two equal masses attract symmetrically and conserve momentum") {
    PreparedLaunch launch = prepare_nbody(2, 0.01f, 1e-3f, 3);
    float xs[2] = {-1.0f, 1.0f};
    for (int i = 0; i < 2; ++i) {
        launch.buffers[0].f32()[i] = xs[i];
        launch.buffers[1].f32()[i] = 0.0f;
        launch.buffers[2].f32()[i] = 0.0f;
        launch.buffers[3].f32()[i] = 1.0f;
        launch.buffers[4].f32()[i] = 0.0f;
        launch.buffers[5].f32()[i] = 0.0f;
        launch.buffers[6].f32()[i] = 0.0f;
    }
    run_on_seq(launch);
    float vx0 = launch.buffers[10].f32()[0];
    float vx1 = launch.buffers[10].f32()[1];
    CHECK(vx0 == doctest::Approx(-vx1).epsilon(1e-6));
    CHECK(vx0 > 0.0f);  // bodies pull toward each other
    double dp = static_cast<double>(vx0) + vx1;
    CHECK(std::abs(dp) <= 1e-5 * std::abs(vx0));
}

TEST_CASE("per-body accelerations match the double-precision oracle within 1e-4") {
    const std::int64_t n = 64;
    const float dt = 0.01f, eps = 1e-3f;
    PreparedLaunch launch = prepare_nbody(n, dt, eps, 17);
    std::vector<float> px(launch.buffers[0].f32(), launch.buffers[0].f32() + n);
    std::vector<float> py(launch.buffers[1].f32(), launch.buffers[1].f32() + n);
    std::vector<float> pz(launch.buffers[2].f32(), launch.buffers[2].f32() + n);
    std::vector<float> mass(launch.buffers[3].f32(), launch.buffers[3].f32() + n);
    std::vector<float> vx(launch.buffers[4].f32(), launch.buffers[4].f32() + n);
    run_on_seq(launch);

    std::vector<double> ax, ay, az;
    oracle::nbody_accelerations(px, py, pz, mass, eps, ax, ay, az);
    for (std::int64_t i = 0; i < n; ++i) {
        // recover a_x from the velocity update
        double got = (static_cast<double>(launch.buffers[10].f32()[i]) - vx[i]) / dt;
        double scale = std::abs(ax[i]) + 1.0;
        REQUIRE(std::abs(got - ax[i]) <= 1e-4 * scale);
    }
}

TEST_CASE("momentum stays balanced across a multi-step run") {
    const std::int64_t n = 48;
    PreparedLaunch launch = prepare_nbody(n, 0.005f, 1e-2f, 23);
    double p_before = 0;
    for (std::int64_t i = 0; i < n; ++i)
        p_before += static_cast<double>(launch.buffers[3].f32()[i]) * launch.buffers[4].f32()[i];
    double p_scale = 0;
    for (std::int64_t i = 0; i < n; ++i)
        p_scale += std::abs(static_cast<double>(launch.buffers[3].f32()[i])) *
                   std::abs(launch.buffers[4].f32()[i]);
    for (int step = 0; step < 3; ++step) {
        if (step > 0) nbody_advance(launch);
        run_on_seq(launch);
    }
    double p_after = 0;
    for (std::int64_t i = 0; i < n; ++i)
        p_after += static_cast<double>(launch.buffers[3].f32()[i]) * launch.buffers[10].f32()[i];
    CHECK(std::abs(p_after - p_before) <= 1e-5 * (p_scale + 1.0));
}

TEST_CASE("run_suite verifies equality, pins SEQ speedup to 1, and fills modeled columns") {
    BenchOptions opts;
    opts.sizes = BenchSizes::smoke();
    opts.sizes.vecadd_n = 512;
    opts.sizes.bs_n = 256;
    opts.sizes.mandel_w = 16;
    opts.sizes.mandel_h = 16;
    opts.sizes.mandel_max_iter = 64;
    opts.sizes.nbody_n = 24;
    auto device = std::make_shared<SimAccelDevice>(quick_profile());
    opts.backends = {Jtp{4}, SimAccel{device}};
    opts.variants = {CodegenOptions{}, CodegenOptions::o3()};
    PowerTable power = load_power_table(std::string(HETERO_SOURCE_DIR) + "/data/power/systemA.json");
    opts.power = &power;

    BenchReport report = run_suite(opts);
    // 4 benchmarks x (1 SEQ row + 2 backends x 2 variants)
    CHECK(report.rows.size() == 4 * 5);
    int sim_rows = 0;
    for (const auto& row : report.rows) {
        if (row.backend == "SEQ") {
            CHECK(row.speedup_vs_seq == 1.0);
            CHECK(row.stats.modeled_transfer_s == 0.0);
        }
        if (row.backend == "SIM_ACCEL") {
            ++sim_rows;
            CHECK(row.modeled_speedup > 0.0);
            CHECK(row.stats.modeled_transfer_s > 0.0);
            CHECK(row.stats.modeled_energy_J > 0.0);
            CHECK(row.modeled_savings_pct < 100.0);
        }
        CHECK(row.stats.flops > 0);
    }
    CHECK(sim_rows == 8);

    // modeled columns are identical run to run
    BenchReport again = run_suite(opts);
    REQUIRE(again.rows.size() == report.rows.size());
    for (size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(again.rows[i].stats.flops == report.rows[i].stats.flops);
        CHECK(again.rows[i].stats.modeled_compute_s == report.rows[i].stats.modeled_compute_s);
        CHECK(again.rows[i].stats.modeled_transfer_s == report.rows[i].stats.modeled_transfer_s);
        CHECK(again.rows[i].modeled_speedup == report.rows[i].modeled_speedup);
        CHECK(again.rows[i].modeled_savings_pct == report.rows[i].modeled_savings_pct);
    }

    const std::string dir = "/tmp/hetero_bench_test";
    std::filesystem::create_directories(dir);
    write_report_csv(report, dir + "/report.csv");
    write_report_json(report, dir + "/report.json");
    CHECK(std::filesystem::file_size(dir + "/report.csv") > 100);
    CHECK(std::filesystem::file_size(dir + "/report.json") > 100);
}

TEST_CASE("calibration workloads describe the report-scale kernels") {
    auto workloads = calibration_workloads();
    REQUIRE(workloads.size() == 3);
    CHECK(workloads[0].benchmark == "mandelbrot");
    CHECK(workloads[0].flops == INT64_C(2048) * 2048 * (4 + 8 * 256));
    CHECK(workloads[0].bytes_d2h == INT64_C(2048) * 2048 * 4);
    CHECK(workloads[2].benchmark == "nbody");
    CHECK(workloads[2].flops == INT64_C(32768) * (13 + 19 * 32768));
    CHECK(workloads[2].bytes_h2d == INT64_C(7) * 4 * 32768);
    CHECK(workloads[2].bytes_d2h == INT64_C(6) * 4 * 32768);
    // every modeled workload clears the offload threshold
    for (const auto& w : workloads) CHECK(static_cast<double>(w.flops) > 2e8);
}

TEST_CASE("PGM dump writes a readable grayscale grid") {
    PreparedLaunch launch = prepare_mandelbrot(8, 8, 32, {});
    run_on_seq(launch);
    const std::string path = "/tmp/hetero_bench_test/mandel.pgm";
    std::filesystem::create_directories("/tmp/hetero_bench_test");
    write_mandel_pgm(launch.buffers[0].i32_span(), 8, 8, 32, path);
    std::ifstream in(path);
    std::string magic;
    in >> magic;
    CHECK(magic == "P2");
}
