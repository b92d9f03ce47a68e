#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "hetero/kmeans.hpp"
#include "hetero/rng.hpp"
#include "support/oracles.hpp"

using namespace hetero;

namespace {

DeviceProfile sim_profile() {
    DeviceProfile p;
    p.name = "sim";
    p.setup_latency_s = 0.001;
    p.pcie_bandwidth_Bps = 1e9;
    p.device_flops_per_s = 1e9;
    p.host_flops_per_s = 1e8;
    p.o3_efficiency = 2.0;
    p.alignment_bytes = 64;
    p.max_parallel_units = 8;
    return p;
}

PointSet points_of(std::vector<float> data, std::int64_t d) {
    PointSet p;
    p.d = d;
    p.n = static_cast<std::int64_t>(data.size()) / d;
    p.data = std::move(data);
    return p;
}

Centroids centroids_of(std::vector<float> data, std::int64_t d) {
    Centroids c;
    c.d = d;
    c.k = static_cast<std::int64_t>(data.size()) / d;
    c.data = std::move(data);
    return c;
}

}  // namespace

TEST_CASE("a point sitting on a centroid is assigned to it") {
    PointSet pts = points_of({5.0f, 7.0f}, 2);
    Centroids cents = centroids_of({1.0f, 1.0f, 5.0f, 7.0f, 9.0f, 9.0f}, 2);
    MapOutput out = map_assign(pts, 0, 1, cents, BackendChoice{Seq{}});
    CHECK(out.assignments == std::vector<std::int32_t>{1});
    CHECK(out.partials.counts[1] == 1);
}

TEST_CASE("1-D point at 4 between centroids 0 and 10 joins the closer one") {
    PointSet pts = points_of({4.0f}, 1);
    Centroids cents = centroids_of({0.0f, 10.0f}, 1);
    MapOutput out = map_assign(pts, 0, 1, cents, BackendChoice{Seq{}});
    CHECK(out.assignments == std::vector<std::int32_t>{0});  // 16 < 36
}

TEST_CASE("equidistant points break ties toward the lowest index") {
    PointSet pts = points_of({5.0f}, 1);
    Centroids cents = centroids_of({9.0f, 1.0f, 3.0f, 9.0f}, 1);
    // distances: 16, 16, 4, 16 -> cluster 2 wins; among the 16s, index 0
    MapOutput out = map_assign(pts, 0, 1, cents, BackendChoice{Seq{}});
    CHECK(out.assignments == std::vector<std::int32_t>{2});

    Centroids tie = centroids_of({9.0f, 1.0f, 9.0f, 1.0f}, 1);
    MapOutput out2 = map_assign(pts, 0, 1, tie, BackendChoice{Seq{}});
    CHECK(out2.assignments == std::vector<std::int32_t>{0});
}

TEST_CASE("map_assign validates dimensions and partition bounds") {
    PointSet pts = points_of({1.0f, 2.0f}, 2);
    Centroids cents = centroids_of({0.0f}, 1);
    CHECK_THROWS_AS(map_assign(pts, 0, 1, cents, BackendChoice{Seq{}}), KmeansError);
    Centroids ok = centroids_of({0.0f, 0.0f}, 2);
    CHECK_THROWS_AS(map_assign(pts, 0, 0, ok, BackendChoice{Seq{}}), KmeansError);
    CHECK_THROWS_AS(map_assign(pts, 1, 0, ok, BackendChoice{Seq{}}), KmeansError);
}

TEST_CASE("reduce over one cluster yields the arithmetic mean") {
    std::mt19937 rng(9);
    const std::int64_t n = 37, d = 3;
    PointSet pts;
    pts.n = n;
    pts.d = d;
    for (std::int64_t i = 0; i < n * d; ++i) pts.data.push_back(uniform_float(rng, -5.0f, 5.0f));
    Centroids prev = centroids_of({0.0f, 0.0f, 0.0f}, 3);
    MapOutput out = map_assign(pts, 0, n, prev, BackendChoice{Seq{}});
    Centroids next = reduce_centroids({&out.partials, 1}, prev);
    for (std::int64_t j = 0; j < d; ++j) {
        float sum = 0.0f;
        for (std::int64_t i = 0; i < n; ++i) sum += pts.data[static_cast<size_t>(i * d + j)];
        CHECK(next.data[static_cast<size_t>(j)] == sum / static_cast<float>(n));
    }
}

TEST_CASE("clusters that receive no points keep their previous centroid") {
    ClusterPartials p = ClusterPartials::zeros(3, 2);
    const std::vector<float> p0{2.0f, 4.0f}, p1{4.0f, 8.0f};
    p.accumulate(p0, 0);
    p.accumulate(p1, 0);
    Centroids prev = centroids_of({0.0f, 0.0f, 7.0f, 7.5f, 1.0f, 2.0f}, 2);
    Centroids next = reduce_centroids({&p, 1}, prev);
    CHECK(next.data[0] == 3.0f);
    CHECK(next.data[1] == 6.0f);
    CHECK(next.data[2] == 7.0f);  // untouched
    CHECK(next.data[3] == 7.5f);
    CHECK(next.data[4] == 1.0f);
    CHECK(next.data[5] == 2.0f);
}

TEST_CASE("run_job is a fixed point when points sit exactly on the init centroids") {
    // 3 distinct locations, points placed exactly there
    Centroids init = centroids_of({0.0f, 0.0f, 10.0f, 0.0f, 0.0f, 10.0f}, 2);
    std::vector<float> data;
    for (int rep = 0; rep < 4; ++rep)
        for (int c = 0; c < 3; ++c) {
            data.push_back(init.data[static_cast<size_t>(c * 2)]);
            data.push_back(init.data[static_cast<size_t>(c * 2 + 1)]);
        }
    PointSet pts = points_of(std::move(data), 2);
    JobConfig config;
    config.iterations = 1;
    JobResult r = run_job(config, pts, init);
    CHECK(std::memcmp(r.centroids.data.data(), init.data.data(), init.data.size() * 4) == 0);
}

TEST_CASE("run_job matches the flat Lloyd oracle exactly on random instances") {
    std::mt19937 rng(1234);
    for (int inst = 0; inst < 50; ++inst) {
        std::int64_t n = 2 + rng() % 199;
        std::int64_t k = 1 + rng() % 8;
        if (k > n) k = n;
        std::int64_t d = 1 + rng() % 5;
        std::int64_t iters = 1 + rng() % 4;
        SyntheticData data = generate_synthetic(n, k, d, rng(), 4.0f);

        Centroids init;
        init.k = k;
        init.d = d;
        init.data.assign(data.points.data.begin(), data.points.data.begin() + k * d);

        JobConfig config;
        config.iterations = iters;
        config.partitions = 1 + rng() % 4;
        JobResult job = run_job(config, data.points, init);

        // oracle: same iteration count, flat loops, float arithmetic
        std::vector<float> cents = init.data;
        oracle::LloydState st;
        for (std::int64_t it = 0; it < iters; ++it) {
            st = oracle::lloyd_step(data.points.data, n, d, cents, k);
            cents = st.centroids;
        }
        CAPTURE(inst);
        REQUIRE(job.assignments == st.assignments);
        REQUIRE(std::memcmp(job.centroids.data.data(), cents.data(), cents.size() * 4) == 0);

        // WCSS never increases across iterations
        for (size_t i = 1; i < job.iterations.size(); ++i)
            REQUIRE(job.iterations[i].wcss <= job.iterations[i - 1].wcss * (1.0 + 1e-9) + 1e-9);
    }
}

TEST_CASE("final centroids are independent of the partition count") {
    SyntheticData data = generate_synthetic(211, 6, 3, 77, 6.0f);
    Centroids init;
    init.k = 6;
    init.d = 3;
    init.data.assign(data.points.data.begin(), data.points.data.begin() + 18);

    std::vector<float> reference;
    for (std::int64_t p : {1, 4, 7}) {
        JobConfig config;
        config.iterations = 3;
        config.partitions = p;
        JobResult r = run_job(config, data.points, init);
        if (reference.empty()) {
            reference = r.centroids.data;
        } else {
            CAPTURE(p);
            REQUIRE(std::memcmp(r.centroids.data.data(), reference.data(),
                                reference.size() * 4) == 0);
        }
    }
}

TEST_CASE("assignments and centroids are backend-invariant across variants") {
    SyntheticData data = generate_synthetic(300, 5, 4, 31, 8.0f);
    Centroids init;
    init.k = 5;
    init.d = 4;
    init.data.assign(data.points.data.begin(), data.points.data.begin() + 20);

    JobConfig base;
    base.iterations = 2;
    JobResult want = run_job(base, data.points, init);

    auto device = std::make_shared<SimAccelDevice>(sim_profile());
    std::vector<JobBackend> backends = {BackendChoice{Jtp{1}}, BackendChoice{Jtp{2}},
                                        BackendChoice{Jtp{8}}, BackendChoice{SimAccel{device}}};
    std::vector<CodegenOptions> variants = {CodegenOptions::pu_ul(1, 1),
                                            CodegenOptions::pu_ul(1, 4),
                                            CodegenOptions::pu_ul(8, 8), CodegenOptions::o3()};
    for (const auto& backend : backends)
        for (const auto& variant : variants) {
            JobConfig config;
            config.iterations = 2;
            config.backend = backend;
            config.variant = variant;
            JobResult got = run_job(config, data.points, init);
            REQUIRE(got.assignments == want.assignments);
            REQUIRE(std::memcmp(got.centroids.data.data(), want.centroids.data.data(),
                                want.centroids.data.size() * 4) == 0);
        }
}

TEST_CASE("AUTO keeps small jobs on the host and sends big ones to the device") {
    auto device = std::make_shared<SimAccelDevice>(sim_profile());
    SyntheticData small = generate_synthetic(100, 5, 2, 3, 2.0f);  // 100*5*2 = 1000
    Centroids init;
    init.k = 5;
    init.d = 2;
    init.data.assign(small.points.data.begin(), small.points.data.begin() + 10);

    JobConfig config;
    config.iterations = 1;
    config.backend = AutoOffload{device, 2, {}};
    JobResult r = run_job(config, small.points, init);
    REQUIRE(r.iterations.size() == 1);
    CHECK(r.iterations[0].backend == "JTP(2)");

    // lower the threshold instead of running a 2e8-flop job here
    config.backend = AutoOffload{device, 2, OffloadPolicy{500.0}};
    r = run_job(config, small.points, init);
    CHECK(r.iterations[0].backend == "SIM_ACCEL");
}

TEST_CASE("seeded jobs replay identically") {
    SyntheticData a = generate_synthetic(500, 7, 3, 99, 5.0f);
    SyntheticData b = generate_synthetic(500, 7, 3, 99, 5.0f);
    REQUIRE(a.points.data == b.points.data);
    REQUIRE(a.true_centers.data == b.true_centers.data);

    Centroids init;
    init.k = 7;
    init.d = 3;
    init.data.assign(a.points.data.begin(), a.points.data.begin() + 21);
    JobConfig config;
    config.iterations = 3;
    JobResult r1 = run_job(config, a.points, init);
    JobResult r2 = run_job(config, b.points, init);
    CHECK(r1.assignments == r2.assignments);
    CHECK(std::memcmp(r1.centroids.data.data(), r2.centroids.data.data(),
                      r1.centroids.data.size() * 4) == 0);
}

TEST_CASE("zero spread places every synthetic point exactly on its center") {
    SyntheticData data = generate_synthetic(12, 4, 3, 5, 0.0f);
    for (std::int64_t i = 0; i < 12; ++i) {
        const float* center = data.true_centers.data.data() + (i % 4) * 3;
        for (std::int64_t j = 0; j < 3; ++j)
            CHECK(data.points.data[static_cast<size_t>(i * 3 + j)] == center[j]);
    }
}

TEST_CASE("the shipped offload example sizes sit on the right side of the threshold") {
    // n=1e6, k=40, d=8 -> 3.2e8 > 2e8
    OffloadPolicy policy;
    CHECK(offload_decide(policy, 1e6 * 40 * 8) == Placement::Accelerator);
    // n=100, k=5, d=2 -> 1000, far below
    CHECK(offload_decide(policy, 100 * 5 * 2) == Placement::Host);
    SyntheticData data = generate_synthetic(1000, 40, 8, 1, 1.0f);
    CHECK(static_cast<double>(data.points.n) * 40 * 8 == 320000.0);
}

TEST_CASE("convergence_eps stops a job early at a fixed point") {
    Centroids init = centroids_of({0.0f, 100.0f}, 1);
    PointSet pts = points_of({0.0f, 0.0f, 100.0f, 100.0f}, 1);
    JobConfig config;
    config.iterations = 10;
    config.convergence_eps = 1e-6f;
    JobResult r = run_job(config, pts, init);
    CHECK(r.converged);
    CHECK(r.iterations.size() < 10);
}

TEST_CASE("points CSV round-trips and rejects ragged rows") {
    const std::string dir = "/tmp/hetero_kmeans_test";
    std::filesystem::create_directories(dir);
    SyntheticData data = generate_synthetic(40, 3, 4, 11, 2.0f);
    write_points_csv(data.points, dir + "/pts.csv");
    PointSet back = load_points_csv(dir + "/pts.csv");
    REQUIRE(back.n == data.points.n);
    REQUIRE(back.d == data.points.d);
    CHECK(back.data == data.points.data);

    std::ofstream bad(dir + "/bad.csv");
    bad << "1.0,2.0\n1.0\n";
    bad.close();
    try {
        load_points_csv(dir + "/bad.csv");
        FAIL("expected KmeansError");
    } catch (const KmeansError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("each partition maps through exactly one kernel launch") {
    SyntheticData data = generate_synthetic(90, 4, 3, 55, 3.0f);
    Centroids init;
    init.k = 4;
    init.d = 3;
    init.data.assign(data.points.data.begin(), data.points.data.begin() + 12);

    auto device = std::make_shared<SimAccelDevice>(sim_profile());
    JobConfig config;
    config.iterations = 2;
    config.partitions = 3;
    config.backend = BackendChoice{SimAccel{device}};
    run_job(config, data.points, init);
    CHECK(device->timeline().size() == 6);  // partitions x iterations
}

TEST_CASE("a power table enables modeled energy in the iteration stats") {
    PowerTable power = load_power_table(std::string(HETERO_SOURCE_DIR) + "/data/power/systemA.json");
    SyntheticData data = generate_synthetic(200, 4, 2, 21, 3.0f);
    Centroids init;
    init.k = 4;
    init.d = 2;
    init.data.assign(data.points.data.begin(), data.points.data.begin() + 8);

    auto device = std::make_shared<SimAccelDevice>(sim_profile());
    JobConfig config;
    config.iterations = 1;
    config.power = &power;

    // accelerator side: meterable device time at fpga wattage
    config.backend = AutoOffload{device, 2, OffloadPolicy{10.0}};  // force offload
    JobResult accel = run_job(config, data.points, init);
    CHECK(accel.iterations[0].backend == "SIM_ACCEL");
    CHECK(accel.iterations[0].modeled_energy_J > 0.0);

    // host side under AUTO: modeled host time at jtp wattage
    config.backend = AutoOffload{device, 2, OffloadPolicy{1e18}};  // force host
    JobResult host = run_job(config, data.points, init);
    CHECK(host.iterations[0].backend == "JTP(2)");
    CHECK(host.iterations[0].modeled_energy_J > 0.0);

    // no table, no energy
    config.power = nullptr;
    config.backend = AutoOffload{device, 2, OffloadPolicy{10.0}};
    JobResult none = run_job(config, data.points, init);
    CHECK(none.iterations[0].modeled_energy_J == 0.0);
}
