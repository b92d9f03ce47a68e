#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hetero/backend.hpp"
#include "hetero/kernels.hpp"
#include "hetero/power.hpp"

// In-process mini MapReduce hosting K-Means: partitioned map tasks compute
// nearest centroids through one aggregated kernel launch per partition, the
// reduce step recomputes centroids host-side in a fixed order, iterated to a
// count or convergence. The reduce summation order is (partition, point) —
// i.e. the flat point order — so results are bit-identical for any
// partition count.

namespace hetero {

struct KmeansError : IrError {
    using IrError::IrError;
};

struct PointSet {
    std::int64_t n = 0;
    std::int64_t d = 0;
    std::vector<float> data;  // n x d, row-major

    std::span<const float> point(std::int64_t i) const {
        return {data.data() + i * d, static_cast<size_t>(d)};
    }
};

struct Centroids {
    std::int64_t k = 0;
    std::int64_t d = 0;
    std::vector<float> data;  // k x d, row-major
};

/// Per-cluster componentwise sums and member counts, accumulated in point
/// order within the originating partition.
struct ClusterPartials {
    std::int64_t k = 0;
    std::int64_t d = 0;
    std::vector<float> sums;         // k x d
    std::vector<std::int64_t> counts;  // k

    static ClusterPartials zeros(std::int64_t k, std::int64_t d);
    void accumulate(std::span<const float> point, std::int32_t cluster);
};

struct MapOutput {
    std::vector<std::int32_t> assignments;
    ClusterPartials partials;
    ExecutionStats stats;
    Placement placement = Placement::Host;  // meaningful under AUTO
    std::string backend_used;
};

/// Backend selection by the offload rule: complexity n_partition*k*d above
/// the threshold goes to the device, otherwise to JTP host workers.
struct AutoOffload {
    std::shared_ptr<SimAccelDevice> device;
    int host_workers = 1;
    OffloadPolicy policy{};
};

using JobBackend = std::variant<BackendChoice, AutoOffload>;

struct JobConfig {
    std::int64_t iterations = 2;
    std::int64_t partitions = 1;
    JobBackend backend = BackendChoice{Seq{}};
    CodegenOptions variant{};
    std::optional<float> convergence_eps;
    const PowerTable* power = nullptr;  // enables modeled energy in stats
};

struct IterationStats {
    std::int64_t iteration = 0;
    double wall_s = 0;
    std::int64_t flops = 0;       // static kernel flops for the iteration
    double complexity = 0;        // n*k*d product measure
    std::string backend;          // backend used for the map launches
    double modeled_energy_J = 0;
    double wcss = 0;              // within-cluster sum of squares
    double max_centroid_move = 0;
};

struct JobResult {
    Centroids centroids;
    std::vector<std::int32_t> assignments;
    std::vector<IterationStats> iterations;
    bool converged = false;
};

/// One aggregated kernel launch assigning every point of the partition to
/// its nearest centroid (ties to the lowest index), plus per-cluster
/// partial sums/counts accumulated in partition point order.
MapOutput map_assign(const PointSet& points, std::int64_t first, std::int64_t last,
                     const Centroids& centroids, const JobBackend& backend,
                     const CodegenOptions& variant = {});

/// Folds partials in order; clusters with zero members keep the previous
/// centroid.
Centroids reduce_centroids(std::span<const ClusterPartials> partials, const Centroids& previous);

JobResult run_job(const JobConfig& config, const PointSet& points, const Centroids& init);

struct SyntheticData {
    PointSet points;
    Centroids true_centers;
};

/// Deterministic generator: k centers uniform in [0,100]^d, points Gaussian
/// (sigma = spread) around round-robin-assigned centers. The exact value
/// derivation from mt19937 draws is documented in docs/FORMATS.md.
SyntheticData generate_synthetic(std::int64_t n, std::int64_t k, std::int64_t d,
                                 std::uint32_t seed, float spread);

/// Launch wrapper for the aggregated map kernel over a full point set.
PreparedLaunch prepare_kmeans_map(const PointSet& points, const Centroids& centroids);

PointSet load_points_csv(const std::string& path);
void write_points_csv(const PointSet& points, const std::string& path);
void write_centroids_csv(const Centroids& c, const std::string& path);
void write_assignments_csv(std::span<const std::int32_t> assignments, const std::string& path);
void write_stats_jsonl(std::span<const IterationStats> stats, const std::string& path);

}  // namespace hetero
