// Command-line front end: kernel code generation, K-Means jobs, power-model
// queries, and benchmark runs. Exit codes are part of the contract:
//   0 success, 2 usage/config error, 3 data error, 4 equality-check failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetero/bench.hpp"
#include "hetero/codegen.hpp"
#include "hetero/ir_json.hpp"
#include "hetero/kmeans.hpp"
#include "hetero/power.hpp"

namespace {

using namespace hetero;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitEquality = 4;

namespace fs = std::filesystem;

// Bare names resolve through HETERO_DATA_DIR (or ./data) so `--profile
// systemA` works anywhere in the tree.
std::string resolve_data_file(const std::string& arg, const std::string& subdir) {
    if (fs::exists(arg)) return arg;
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("HETERO_DATA_DIR")) roots.emplace_back(env);
    roots.emplace_back("data");
    for (const auto& root : roots) {
        fs::path p = root / subdir / (arg + ".json");
        if (fs::exists(p)) return p.string();
        p = root / subdir / arg;
        if (fs::exists(p)) return p.string();
    }
    throw std::runtime_error("cannot find '" + arg + "' (looked in " + subdir +
                             " under $HETERO_DATA_DIR and ./data)");
}

CodegenOptions parse_variant_or_throw(const std::string& s) {
    auto v = CodegenOptions::parse_variant(s);
    if (!v) throw CLI::ValidationError("--variant", "expected \"O3\" or \"<int>PU-<int>UL\"");
    return *v;
}

KernelDef builtin_kernel(const std::string& name) {
    if (name == "vecadd") return vecadd_kernel(1024);
    if (name == "mandelbrot") return mandelbrot_kernel(64, 64, 256);
    if (name == "black-scholes") return black_scholes_kernel(1024);
    if (name == "nbody") return nbody_step_kernel(64);
    if (name == "kmeans-map") return kmeans_map_kernel(1024, 8, 8);
    throw std::runtime_error("unknown kernel '" + name +
                             "' (built-ins: vecadd, mandelbrot, black-scholes, nbody, kmeans-map)");
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw std::runtime_error(std::string("bad ") + what + " value '" + item + "'");
        }
    }
    if (out.empty()) throw std::runtime_error(std::string("empty ") + what + " list");
    return out;
}

struct BackendSpec {
    std::string label;
    BackendChoice choice;
};

std::vector<BackendSpec> parse_backends(const std::string& list,
                                        const std::shared_ptr<SimAccelDevice>& device) {
    std::vector<BackendSpec> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "seq") {
            out.push_back({"seq", Seq{}});
        } else if (item == "jtp" || item.rfind("jtp:", 0) == 0) {
            int workers = 4;
            if (item.size() > 4) workers = std::stoi(item.substr(4));
            if (workers < 1) throw std::runtime_error("jtp worker count must be >= 1");
            out.push_back({item, Jtp{workers}});
        } else if (item == "sim") {
            if (!device) throw std::runtime_error("backend 'sim' requires --profile");
            out.push_back({"sim", SimAccel{device}});
        } else {
            throw std::runtime_error("unknown backend '" + item + "' (seq, jtp[:w], sim)");
        }
    }
    return out;
}

int cmd_codegen(const std::string& kernel_arg, const std::string& ir_path,
                const std::string& variant_str, const std::string& out_path) {
    CodegenOptions opts = parse_variant_or_throw(variant_str);
    KernelDef kernel = ir_path.empty() ? builtin_kernel(kernel_arg) : load_kernel_json(ir_path);
    std::string source = emit_opencl(kernel, opts);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << source;
    std::cout << "wrote " << out_path << " variant " << opts.variant_name() << " ("
              << source.size() << " bytes)\n";
    return 0;
}

int cmd_kmeans(const std::string& points_path, const std::string& synthetic,
               std::int64_t k_flag, std::int64_t iters, std::int64_t partitions,
               const std::string& backend_str, const std::string& variant_str,
               const std::string& profile_arg, const std::string& power_arg, std::uint32_t seed,
               double spread, double eps, const std::string& out_dir) {
    PointSet points;
    std::int64_t k = k_flag;
    if (!synthetic.empty()) {
        auto parts = parse_double_list(synthetic, "--synthetic");
        if (parts.size() != 3) throw CLI::ValidationError("--synthetic", "expected n,k,d");
        auto n = static_cast<std::int64_t>(parts[0]);
        k = static_cast<std::int64_t>(parts[1]);
        auto d = static_cast<std::int64_t>(parts[2]);
        if (k > n) throw CLI::ValidationError("--synthetic", "k must not exceed n");
        points = generate_synthetic(n, k, d, seed, static_cast<float>(spread)).points;
    } else {
        points = load_points_csv(points_path);
        if (k < 1) throw CLI::ValidationError("--k", "required with --points");
        if (k > points.n) throw CLI::ValidationError("--k", "k must not exceed the point count");
    }

    std::shared_ptr<SimAccelDevice> device;
    std::optional<PowerTable> power;
    if (!profile_arg.empty()) {
        DeviceProfile profile = load_device_profile(resolve_data_file(profile_arg, "profiles"));
        device = std::make_shared<SimAccelDevice>(profile);
    }
    if (!power_arg.empty()) power = load_power_table(resolve_data_file(power_arg, "power"));

    JobConfig config;
    config.iterations = iters;
    config.partitions = partitions;
    config.variant = parse_variant_or_throw(variant_str);
    if (eps > 0) config.convergence_eps = static_cast<float>(eps);
    if (power) config.power = &*power;

    if (backend_str == "auto") {
        if (!device) throw CLI::ValidationError("--backend", "auto requires --profile");
        config.backend = AutoOffload{device, 4, {}};
    } else {
        auto specs = parse_backends(backend_str, device);
        if (specs.size() != 1) throw CLI::ValidationError("--backend", "expected one backend");
        config.backend = specs[0].choice;
    }

    // First k points seed the centroids; deterministic and data-independent.
    Centroids init;
    init.k = k;
    init.d = points.d;
    init.data.assign(points.data.begin(), points.data.begin() + k * points.d);

    JobResult result = run_job(config, points, init);

    fs::create_directories(out_dir);
    write_centroids_csv(result.centroids, (fs::path(out_dir) / "centroids.csv").string());
    write_assignments_csv(result.assignments, (fs::path(out_dir) / "assignments.csv").string());
    write_stats_jsonl(result.iterations, (fs::path(out_dir) / "stats.jsonl").string());

    double complexity = static_cast<double>(points.n) * k * points.d;
    std::cout << "kmeans n=" << points.n << " k=" << k << " d=" << points.d
              << " complexity(n*k*d)=" << complexity << "\n";
    for (const auto& it : result.iterations)
        std::cout << "iteration " << it.iteration << ": backend=" << it.backend
                  << " wcss=" << it.wcss << " wall_s=" << it.wall_s << "\n";
    if (result.converged) std::cout << "converged early\n";
    std::cout << "wrote " << out_dir << "/{centroids.csv,assignments.csv,stats.jsonl}\n";
    return 0;
}

int cmd_power(const std::string& table_arg, const std::string& speedups_str,
              const std::string& idle_str) {
    PowerTable table = load_power_table(resolve_data_file(table_arg, "power"));
    auto speedups = parse_double_list(speedups_str, "--speedup");
    auto idles = parse_double_list(idle_str, "--idle");
    for (double f : idles)
        if (f < 0 || f >= 1)
            throw CLI::ValidationError("--idle", "idle fractions must lie in [0, 1)");
    std::cout << "speedup";
    for (double f : idles) std::cout << ",f=" << f;
    std::cout << "\n";
    for (double s : speedups) {
        std::cout << s;
        for (double f : idles) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", energy_savings(table, {s, f}));
            std::cout << "," << buf;
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_bench(const std::string& suite, const std::string& backends_str,
              const std::string& variants_str, const std::string& profile_arg,
              const std::string& power_arg, const std::string& out_dir,
              const std::string& sizes_name, std::uint32_t seed, const std::string& pgm_path) {
    BenchOptions opts;
    opts.seed = seed;
    if (sizes_name == "smoke")
        opts.sizes = BenchSizes::smoke();
    else if (sizes_name == "report")
        opts.sizes = BenchSizes::report_defaults();
    else
        throw CLI::ValidationError("--sizes", "expected smoke or report");

    opts.benchmarks.clear();
    std::stringstream ss(suite);
    std::string item;
    while (std::getline(ss, item, ',')) opts.benchmarks.push_back(item);

    std::shared_ptr<SimAccelDevice> device;
    if (!profile_arg.empty()) {
        DeviceProfile profile = load_device_profile(resolve_data_file(profile_arg, "profiles"));
        device = std::make_shared<SimAccelDevice>(profile);
    }
    std::optional<PowerTable> power;
    if (!power_arg.empty()) {
        power = load_power_table(resolve_data_file(power_arg, "power"));
        opts.power = &*power;
    }

    for (auto& spec : parse_backends(backends_str, device)) opts.backends.push_back(spec.choice);

    opts.variants.clear();
    std::stringstream vs(variants_str);
    while (std::getline(vs, item, ',')) opts.variants.push_back(parse_variant_or_throw(item));

    BenchReport report = run_suite(opts);

    fs::create_directories(out_dir);
    write_report_csv(report, (fs::path(out_dir) / "bench.csv").string());
    write_report_json(report, (fs::path(out_dir) / "bench.json").string());
    std::cout << "benchmark,backend,variant,wall_s,speedup_vs_seq,modeled_speedup\n";
    for (const auto& r : report.rows)
        std::cout << r.benchmark << "," << r.backend << "," << r.variant << "," << r.wall_time_s
                  << "," << r.speedup_vs_seq << "," << r.modeled_speedup << "\n";
    std::cout << "wrote " << out_dir << "/bench.{csv,json}\n";

    if (!pgm_path.empty()) {
        PreparedLaunch mb = prepare_mandelbrot(opts.sizes.mandel_w, opts.sizes.mandel_h,
                                               opts.sizes.mandel_max_iter, {});
        Bindings b = mb.bindings();
        execute(mb.kernel, b, mb.range, Seq{});
        write_mandel_pgm(mb.buffers[0].i32_span(), opts.sizes.mandel_w, opts.sizes.mandel_h,
                         opts.sizes.mandel_max_iter, pgm_path);
        std::cout << "wrote " << pgm_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterogeneous kernel framework: codegen, backends, cost model, k-means"};
    app.require_subcommand(1);

    auto* cg = app.add_subcommand("codegen", "emit OpenCL-C source for a kernel");
    std::string cg_kernel, cg_ir, cg_variant = "1PU-1UL", cg_out = "out.cl";
    cg->add_option("--kernel", cg_kernel, "built-in kernel name");
    cg->add_option("--ir", cg_ir, "kernel IR JSON file");
    cg->add_option("--variant", cg_variant, "O3 or <PU>PU-<UL>UL");
    cg->add_option("-o,--out", cg_out, "output .cl path");

    auto* km = app.add_subcommand("kmeans", "run a K-Means MapReduce job");
    std::string km_points, km_synthetic, km_backend = "seq", km_variant = "1PU-1UL";
    std::string km_profile, km_power, km_out = "kmeans-out";
    std::int64_t km_k = 0, km_iters = 2, km_partitions = 1;
    std::uint32_t km_seed = 1;
    double km_spread = 5.0, km_eps = 0;
    km->add_option("--points", km_points, "points CSV (one point per line)");
    km->add_option("--synthetic", km_synthetic, "generate n,k,d synthetic points");
    km->add_option("--k", km_k, "cluster count (with --points)");
    km->add_option("--iters", km_iters, "iterations");
    km->add_option("--partitions", km_partitions, "map partitions");
    km->add_option("--backend", km_backend, "seq | jtp[:w] | sim | auto");
    km->add_option("--variant", km_variant, "kernel variant");
    km->add_option("--profile", km_profile, "device profile (path or name)");
    km->add_option("--power-table", km_power, "power table (path or name)");
    km->add_option("--seed", km_seed, "generator seed");
    km->add_option("--spread", km_spread, "synthetic cluster sigma");
    km->add_option("--eps", km_eps, "convergence threshold (0 = off)");
    km->add_option("--out-dir", km_out, "output directory");

    auto* pw = app.add_subcommand("power", "energy savings matrix from a power table");
    std::string pw_table, pw_speedup, pw_idle = "0,0.1,0.2";
    pw->add_option("--table", pw_table, "power table (path or name)")->required();
    pw->add_option("--speedup", pw_speedup, "comma-separated speedups")->required();
    pw->add_option("--idle", pw_idle, "comma-separated idle fractions");

    auto* bn = app.add_subcommand("bench", "run the benchmark suite");
    std::string bn_suite = "vecadd,mandelbrot,black-scholes,nbody";
    std::string bn_backends = "seq,jtp:4", bn_variants = "1PU-1UL";
    std::string bn_profile, bn_power, bn_out = "bench-out", bn_sizes = "smoke", bn_pgm;
    std::uint32_t bn_seed = 1;
    bn->add_option("--suite", bn_suite, "comma-separated benchmark names");
    bn->add_option("--backends", bn_backends, "seq,jtp[:w],sim");
    bn->add_option("--variants", bn_variants, "comma-separated variants");
    bn->add_option("--profile", bn_profile, "device profile (path or name)");
    bn->add_option("--power-table", bn_power, "power table (path or name)");
    bn->add_option("--out", bn_out, "output directory");
    bn->add_option("--sizes", bn_sizes, "smoke | report");
    bn->add_option("--seed", bn_seed, "input seed");
    bn->add_option("--pgm", bn_pgm, "write a Mandelbrot PGM here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (cg->parsed()) {
            if (cg_kernel.empty() == cg_ir.empty()) {
                std::cerr << "codegen: exactly one of --kernel / --ir is required\n";
                return kExitUsage;
            }
            return cmd_codegen(cg_kernel, cg_ir, cg_variant, cg_out);
        }
        if (km->parsed()) {
            if (km_points.empty() == km_synthetic.empty()) {
                std::cerr << "kmeans: exactly one of --points / --synthetic is required\n";
                return kExitUsage;
            }
            return cmd_kmeans(km_points, km_synthetic, km_k, km_iters, km_partitions, km_backend,
                              km_variant, km_profile, km_power, km_seed, km_spread, km_eps,
                              km_out);
        }
        if (pw->parsed()) return cmd_power(pw_table, pw_speedup, pw_idle);
        if (bn->parsed())
            return cmd_bench(bn_suite, bn_backends, bn_variants, bn_profile, bn_power, bn_out,
                             bn_sizes, bn_seed, bn_pgm);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const BenchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEquality;
    } catch (const KmeansError& e) {
        std::cerr << "error: " << e.what() << "\n";
        // Data-shaped problems (bad CSV rows) exit 3; config problems exit 2.
        std::string msg = e.what();
        return msg.find("line ") != std::string::npos ? kExitData : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
