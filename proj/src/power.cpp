#include "hetero/power.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hetero {

bool PowerTable::valid() const {
    if (shutdown_W <= 0 || idle_cpu_only_W <= 0 || idle_with_fpga_W <= 0 || jtp_active_W <= 0 ||
        fpga_active_W <= 0)
        return false;
    if (!(shutdown_W < idle_cpu_only_W)) return false;
    if (!(idle_cpu_only_W < jtp_active_W)) return false;
    if (!(idle_with_fpga_W < fpga_active_W)) return false;
    return idle_cpu_only_W <= idle_with_fpga_W;
}

const char* to_string(Placement p) {
    return p == Placement::Host ? "HOST" : "ACCELERATOR";
}

double energy_savings(const PowerTable& table, const SavingsQuery& q) {
    if (!(q.speedup > 0)) throw std::invalid_argument("energy_savings: speedup must be > 0");
    if (!(q.idle_fraction >= 0) || q.idle_fraction >= 1)
        throw std::invalid_argument("energy_savings: idle fraction must lie in [0, 1)");
    double idle_ratio = q.idle_fraction / (1.0 - q.idle_fraction);
    double e_cpu = table.jtp_active_W + table.idle_cpu_only_W * idle_ratio;
    double e_acc = (table.fpga_active_W + table.idle_with_fpga_W * idle_ratio) / q.speedup;
    return 100.0 * (1.0 - e_acc / e_cpu);
}

double idle_power_overhead(const PowerTable& table) {
    return table.idle_with_fpga_W - table.idle_cpu_only_W;
}

Placement offload_decide(const OffloadPolicy& policy, double complexity) {
    if (complexity < 0) throw std::invalid_argument("offload_decide: complexity must be >= 0");
    return complexity > policy.complexity_threshold ? Placement::Accelerator : Placement::Host;
}

double predict_speedup(const DeviceProfile& profile, std::int64_t flops, std::int64_t bytes_h2d,
                       std::int64_t bytes_d2h, const CodegenOptions& opts,
                       std::int64_t innermost_trip) {
    if (flops <= 0 || bytes_h2d < 0 || bytes_d2h < 0)
        throw std::invalid_argument("predict_speedup: workload sizes must be positive");
    double host_time = static_cast<double>(flops) / profile.host_flops_per_s;
    double accel_time =
        modeled_accel_time(profile, flops, bytes_h2d, bytes_d2h, opts, innermost_trip);
    return host_time / accel_time;
}

namespace {

nlohmann::json load_json(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(std::string(what) + ": cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string(what) + ": '" + path + "' is not valid JSON: " +
                                 e.what());
    }
    return j;
}

}  // namespace

PowerTable load_power_table(const std::string& path) {
    nlohmann::json j = load_json(path, "power table");
    PowerTable t;
    try {
        t.system_name = j.at("system_name").get<std::string>();
        t.shutdown_W = j.at("shutdown_W").get<double>();
        t.idle_cpu_only_W = j.at("idle_cpu_only_W").get<double>();
        t.idle_with_fpga_W = j.at("idle_with_fpga_W").get<double>();
        t.jtp_active_W = j.at("jtp_active_W").get<double>();
        t.fpga_active_W = j.at("fpga_active_W").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("power table '" + path + "': " + e.what());
    }
    if (!t.valid())
        throw std::runtime_error("power table '" + path + "' violates shutdown < idle < active");
    return t;
}

DeviceProfile load_device_profile(const std::string& path) {
    nlohmann::json j = load_json(path, "device profile");
    DeviceProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.setup_latency_s = j.at("setup_latency_s").get<double>();
        p.pcie_bandwidth_Bps = j.at("pcie_bandwidth_Bps").get<double>();
        p.device_flops_per_s = j.at("device_flops_per_s").get<double>();
        p.host_flops_per_s = j.at("host_flops_per_s").get<double>();
        p.o3_efficiency = j.at("o3_efficiency").get<double>();
        p.alignment_bytes = j.at("alignment_bytes").get<std::int64_t>();
        p.max_parallel_units = j.at("max_parallel_units").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("device profile '" + path + "': " + e.what());
    }
    if (!p.valid())
        throw std::runtime_error("device profile '" + path + "' has invalid parameters");
    return p;
}

}  // namespace hetero
