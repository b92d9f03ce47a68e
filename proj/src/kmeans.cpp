#include "hetero/kmeans.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hetero/rng.hpp"

namespace hetero {

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

ClusterPartials ClusterPartials::zeros(std::int64_t k, std::int64_t d) {
    ClusterPartials p;
    p.k = k;
    p.d = d;
    p.sums.assign(static_cast<size_t>(k * d), 0.0f);
    p.counts.assign(static_cast<size_t>(k), 0);
    return p;
}

void ClusterPartials::accumulate(std::span<const float> point, std::int32_t cluster) {
    float* row = sums.data() + static_cast<std::int64_t>(cluster) * d;
    for (std::int64_t j = 0; j < d; ++j) row[j] += point[static_cast<size_t>(j)];
    counts[static_cast<size_t>(cluster)] += 1;
}

MapOutput map_assign(const PointSet& points, std::int64_t first, std::int64_t last,
                     const Centroids& centroids, const JobBackend& backend,
                     const CodegenOptions& variant) {
    if (points.d != centroids.d)
        throw KmeansError("map_assign: points have d=" + std::to_string(points.d) +
                          " but centroids have d=" + std::to_string(centroids.d));
    if (first < 0 || last > points.n || first >= last)
        throw KmeansError("map_assign: empty or out-of-range partition [" +
                          std::to_string(first) + "," + std::to_string(last) + ")");

    const std::int64_t np = last - first;
    const std::int64_t k = centroids.k;
    const std::int64_t d = points.d;

    MapOutput out;
    double complexity = static_cast<double>(np) * static_cast<double>(k) * static_cast<double>(d);

    BackendChoice chosen;
    if (const auto* autob = std::get_if<AutoOffload>(&backend)) {
        out.placement = offload_decide(autob->policy, complexity);
        if (out.placement == Placement::Accelerator) {
            if (!autob->device) throw KmeansError("map_assign: AUTO has no accelerator device");
            chosen = SimAccel{autob->device};
        } else {
            chosen = Jtp{autob->host_workers};
        }
    } else {
        chosen = std::get<BackendChoice>(backend);
        if (std::holds_alternative<SimAccel>(chosen)) out.placement = Placement::Accelerator;
    }
    out.backend_used = backend_name(chosen);

    // The baseline IR runs regardless of variant (unrolling preserves
    // results bit for bit); the variant feeds the accelerator timing model,
    // where the unroll gain is capped by the baseline d-loop trip count.
    KernelDef kernel = kmeans_map_kernel(np, k, d);

    HostBuffer pts = HostBuffer::from_f32(
        std::span<const float>(points.data.data() + first * d, static_cast<size_t>(np * d)));
    HostBuffer cents = HostBuffer::from_f32(centroids.data);
    HostBuffer labels(ScalarType::I32, np);

    Bindings b = Bindings::for_kernel(kernel);
    b.buffers = {&pts, &cents, &labels};
    b.scalars = {Value::i32(static_cast<std::int32_t>(k)),
                 Value::i32(static_cast<std::int32_t>(d))};

    out.stats = execute(kernel, b, {np, 1}, chosen, variant);

    out.assignments.assign(labels.i32(), labels.i32() + np);
    out.partials = ClusterPartials::zeros(k, d);
    for (std::int64_t i = 0; i < np; ++i)
        out.partials.accumulate(points.point(first + i), out.assignments[static_cast<size_t>(i)]);
    return out;
}

Centroids reduce_centroids(std::span<const ClusterPartials> partials, const Centroids& previous) {
    Centroids next = previous;
    if (partials.empty()) return next;
    const std::int64_t k = previous.k;
    const std::int64_t d = previous.d;
    ClusterPartials total = ClusterPartials::zeros(k, d);
    for (const auto& p : partials) {
        if (p.k != k || p.d != d)
            throw KmeansError("reduce_centroids: partial dimensioned " + std::to_string(p.k) +
                              "x" + std::to_string(p.d) + ", expected " + std::to_string(k) + "x" +
                              std::to_string(d));
        for (std::int64_t i = 0; i < k * d; ++i)
            total.sums[static_cast<size_t>(i)] += p.sums[static_cast<size_t>(i)];
        for (std::int64_t c = 0; c < k; ++c)
            total.counts[static_cast<size_t>(c)] += p.counts[static_cast<size_t>(c)];
    }
    for (std::int64_t c = 0; c < k; ++c) {
        std::int64_t count = total.counts[static_cast<size_t>(c)];
        if (count == 0) continue;  // empty cluster keeps its previous centroid
        for (std::int64_t j = 0; j < d; ++j)
            next.data[static_cast<size_t>(c * d + j)] =
                total.sums[static_cast<size_t>(c * d + j)] / static_cast<float>(count);
    }
    return next;
}

namespace {

double wcss_of(const PointSet& points, std::span<const std::int32_t> assignments,
               const Centroids& centroids) {
    double total = 0;
    for (std::int64_t i = 0; i < points.n; ++i) {
        const float* p = points.data.data() + i * points.d;
        const float* c =
            centroids.data.data() + static_cast<std::int64_t>(assignments[static_cast<size_t>(i)]) * points.d;
        for (std::int64_t j = 0; j < points.d; ++j) {
            double diff = static_cast<double>(p[j]) - static_cast<double>(c[j]);
            total += diff * diff;
        }
    }
    return total;
}

}  // namespace

JobResult run_job(const JobConfig& config, const PointSet& points, const Centroids& init) {
    if (init.d != points.d) throw KmeansError("run_job: centroid dimensions do not match points");
    if (init.k > points.n) throw KmeansError("run_job: k exceeds the number of points");
    if (config.iterations < 1) throw KmeansError("run_job: iterations must be >= 1");
    if (config.partitions < 1 || config.partitions > points.n)
        throw KmeansError("run_job: partitions must lie in [1, n]");

    const std::int64_t n = points.n;
    const std::int64_t k = init.k;
    const std::int64_t d = points.d;
    const std::int64_t p = config.partitions;
    const std::int64_t chunk = (n + p - 1) / p;

    JobResult result;
    result.centroids = init;

    for (std::int64_t iter = 0; iter < config.iterations; ++iter) {
        double t0 = now_s();
        IterationStats is;
        is.iteration = iter + 1;
        is.complexity = static_cast<double>(n) * static_cast<double>(k) * static_cast<double>(d);

        std::vector<MapOutput> outputs;
        outputs.reserve(static_cast<size_t>(p));
        for (std::int64_t part = 0; part < p; ++part) {
            std::int64_t lo = part * chunk;
            std::int64_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            outputs.push_back(
                map_assign(points, lo, hi, result.centroids, config.backend, config.variant));
        }

        // Reduce with the fixed (partition, point) summation order; since
        // partitions are contiguous chunks this is the flat point order,
        // independent of the partition count.
        result.assignments.clear();
        result.assignments.reserve(static_cast<size_t>(n));
        ClusterPartials merged = ClusterPartials::zeros(k, d);
        std::int64_t base = 0;
        for (const auto& mo : outputs) {
            for (size_t i = 0; i < mo.assignments.size(); ++i) {
                merged.accumulate(points.point(base + static_cast<std::int64_t>(i)),
                                  mo.assignments[i]);
                result.assignments.push_back(mo.assignments[i]);
            }
            base += static_cast<std::int64_t>(mo.assignments.size());
        }
        is.wcss = wcss_of(points, result.assignments, result.centroids);

        Centroids next = reduce_centroids(std::span<const ClusterPartials>(&merged, 1),
                                          result.centroids);

        double max_move = 0;
        for (std::int64_t c = 0; c < k; ++c) {
            double move2 = 0;
            for (std::int64_t j = 0; j < d; ++j) {
                double diff = static_cast<double>(next.data[static_cast<size_t>(c * d + j)]) -
                              static_cast<double>(result.centroids.data[static_cast<size_t>(c * d + j)]);
                move2 += diff * diff;
            }
            max_move = std::max(max_move, std::sqrt(move2));
        }
        result.centroids = std::move(next);

        is.backend = outputs.empty() ? "" : outputs.front().backend_used;
        for (const auto& mo : outputs) {
            is.flops += mo.stats.flops;
            if (config.power) {
                if (std::holds_alternative<AutoOffload>(config.backend) ||
                    mo.placement == Placement::Accelerator) {
                    double modeled_time = mo.stats.modeled_time_s();
                    if (mo.placement == Placement::Accelerator) {
                        is.modeled_energy_J += modeled_time * config.power->fpga_active_W;
                    } else if (const auto* autob = std::get_if<AutoOffload>(&config.backend);
                               autob && autob->device) {
                        double host_time = static_cast<double>(mo.stats.flops) /
                                           autob->device->profile().host_flops_per_s;
                        is.modeled_energy_J += host_time * config.power->jtp_active_W;
                    }
                }
            }
        }
        is.max_centroid_move = max_move;
        is.wall_s = now_s() - t0;
        result.iterations.push_back(is);

        if (config.convergence_eps && max_move < *config.convergence_eps) {
            result.converged = true;
            break;
        }
    }
    return result;
}

SyntheticData generate_synthetic(std::int64_t n, std::int64_t k, std::int64_t d,
                                 std::uint32_t seed, float spread) {
    if (k > n) throw KmeansError("generate_synthetic: k must not exceed n");
    if (n < 1 || d < 1) throw KmeansError("generate_synthetic: n and d must be >= 1");
    SyntheticData out;
    out.true_centers.k = k;
    out.true_centers.d = d;
    out.true_centers.data.resize(static_cast<size_t>(k * d));
    std::mt19937 rng(seed);
    for (auto& c : out.true_centers.data)
        c = static_cast<float>(100.0 * uniform01(rng));
    out.points.n = n;
    out.points.d = d;
    out.points.data.resize(static_cast<size_t>(n * d));
    for (std::int64_t i = 0; i < n; ++i) {
        const float* center = out.true_centers.data.data() + (i % k) * d;
        float* row = out.points.data.data() + i * d;
        for (std::int64_t j = 0; j < d; ++j)
            row[j] = static_cast<float>(center[j] + static_cast<double>(spread) * gaussian(rng));
    }
    return out;
}

PreparedLaunch prepare_kmeans_map(const PointSet& points, const Centroids& centroids) {
    if (points.d != centroids.d) throw KmeansError("prepare_kmeans_map: dimension mismatch");
    PreparedLaunch p;
    p.kernel = kmeans_map_kernel(points.n, centroids.k, points.d);
    p.range = {points.n, 1};
    p.buffers.push_back(HostBuffer::from_f32(points.data));
    p.buffers.push_back(HostBuffer::from_f32(centroids.data));
    p.buffers.emplace_back(ScalarType::I32, points.n);
    p.scalars = {Value::i32(static_cast<std::int32_t>(centroids.k)),
                 Value::i32(static_cast<std::int32_t>(points.d))};
    return p;
}

PointSet load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw KmeansError("cannot open points file '" + path + "'");
    PointSet ps;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<float> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            float v = 0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{})
                throw KmeansError("line " + std::to_string(lineno) + " of '" + path +
                                  "': malformed number");
            row.push_back(v);
            p = next;
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p < end) {
                if (*p != ',')
                    throw KmeansError("line " + std::to_string(lineno) + " of '" + path +
                                      "': expected ','");
                ++p;
            }
        }
        if (row.empty())
            throw KmeansError("line " + std::to_string(lineno) + " of '" + path + "': empty row");
        if (ps.d == 0) {
            ps.d = static_cast<std::int64_t>(row.size());
        } else if (static_cast<std::int64_t>(row.size()) != ps.d) {
            throw KmeansError("line " + std::to_string(lineno) + " of '" + path + "': has " +
                              std::to_string(row.size()) + " values, expected " +
                              std::to_string(ps.d));
        }
        ps.data.insert(ps.data.end(), row.begin(), row.end());
        ps.n += 1;
    }
    if (ps.n == 0) throw KmeansError("points file '" + path + "' is empty");
    return ps;
}

namespace {

std::string format_float(float v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

}  // namespace

void write_points_csv(const PointSet& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw KmeansError("cannot write '" + path + "'");
    for (std::int64_t i = 0; i < points.n; ++i) {
        for (std::int64_t j = 0; j < points.d; ++j) {
            if (j) out << ",";
            out << format_float(points.data[static_cast<size_t>(i * points.d + j)]);
        }
        out << "\n";
    }
}

void write_centroids_csv(const Centroids& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw KmeansError("cannot write '" + path + "'");
    for (std::int64_t i = 0; i < c.k; ++i) {
        for (std::int64_t j = 0; j < c.d; ++j) {
            if (j) out << ",";
            out << format_float(c.data[static_cast<size_t>(i * c.d + j)]);
        }
        out << "\n";
    }
}

void write_assignments_csv(std::span<const std::int32_t> assignments, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw KmeansError("cannot write '" + path + "'");
    for (std::int32_t a : assignments) out << a << "\n";
}

void write_stats_jsonl(std::span<const IterationStats> stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw KmeansError("cannot write '" + path + "'");
    for (const auto& s : stats) {
        std::ostringstream os;
        os << "{\"iteration\":" << s.iteration << ",\"wall_s\":" << s.wall_s
           << ",\"flops\":" << s.flops << ",\"complexity\":" << s.complexity << ",\"backend\":\""
           << s.backend << "\",\"modeled_energy_J\":" << s.modeled_energy_J
           << ",\"wcss\":" << s.wcss << ",\"max_centroid_move\":" << s.max_centroid_move << "}";
        out << os.str() << "\n";
    }
}

}  // namespace hetero
