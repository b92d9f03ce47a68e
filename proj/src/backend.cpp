#include "hetero/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <thread>

namespace hetero {

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::int64_t elem_bytes(std::int64_t count) { return count * 4; }

}  // namespace

HostBuffer::HostBuffer(ScalarType elem, std::int64_t count, std::size_t alignment,
                       std::size_t offset)
    : elem_(elem), count_(count), req_align_(alignment), req_offset_(offset) {
    if (elem == ScalarType::Bool) throw BindingError("bool buffers are not supported");
    if (count < 1) throw BindingError("buffer count must be >= 1");
    if (alignment == 0 || (alignment & (alignment - 1)) != 0)
        throw BindingError("alignment must be a power of two");
    storage_.resize(static_cast<size_t>(elem_bytes(count)) + alignment + offset);
    auto addr = reinterpret_cast<std::uintptr_t>(storage_.data());
    std::uintptr_t aligned = (addr + alignment - 1) & ~static_cast<std::uintptr_t>(alignment - 1);
    base_ = storage_.data() + (aligned - addr) + offset;
    std::memset(base_, 0, static_cast<size_t>(elem_bytes(count)));
}

HostBuffer::HostBuffer(const HostBuffer& other)
    : HostBuffer(other.elem_, other.count_, other.req_align_, other.req_offset_) {
    std::memcpy(base_, other.base_, static_cast<size_t>(elem_bytes(count_)));
}

HostBuffer& HostBuffer::operator=(const HostBuffer& other) {
    if (this != &other) *this = HostBuffer(other);
    return *this;
}

HostBuffer HostBuffer::from_f32(std::span<const float> data, std::size_t alignment,
                                std::size_t offset) {
    HostBuffer b(ScalarType::F32, static_cast<std::int64_t>(data.size()), alignment, offset);
    std::memcpy(b.base_, data.data(), data.size_bytes());
    return b;
}

HostBuffer HostBuffer::from_i32(std::span<const std::int32_t> data, std::size_t alignment,
                                std::size_t offset) {
    HostBuffer b(ScalarType::I32, static_cast<std::int64_t>(data.size()), alignment, offset);
    std::memcpy(b.base_, data.data(), data.size_bytes());
    return b;
}

HostBuffer align_host_buffer(HostBuffer buf, std::size_t alignment) {
    if (alignment == 0 || (alignment & (alignment - 1)) != 0)
        throw BindingError("alignment must be a power of two");
    if (buf.address() % alignment == 0) return buf;
    HostBuffer aligned(buf.elem(), buf.count(), alignment);
    std::memcpy(aligned.elem() == ScalarType::F32 ? static_cast<void*>(aligned.f32())
                                                  : static_cast<void*>(aligned.i32()),
                buf.elem() == ScalarType::F32 ? static_cast<const void*>(buf.f32())
                                              : static_cast<const void*>(buf.i32()),
                static_cast<size_t>(elem_bytes(buf.count())));
    return aligned;
}

bool DeviceProfile::valid() const {
    if (setup_latency_s < 0) return false;
    if (pcie_bandwidth_Bps <= 0 || device_flops_per_s <= 0 || host_flops_per_s <= 0) return false;
    if (o3_efficiency <= 0 || max_parallel_units < 1) return false;
    return alignment_bytes >= 1 && (alignment_bytes & (alignment_bytes - 1)) == 0;
}

double effective_parallelism(const DeviceProfile& profile, const CodegenOptions& opts,
                             std::int64_t innermost_trip) {
    double pu = static_cast<double>(std::min<std::int64_t>(opts.compute_units,
                                                           profile.max_parallel_units));
    double ul_gain = static_cast<double>(
        std::min<std::int64_t>(opts.unroll_factor, std::max<std::int64_t>(1, innermost_trip)));
    double eff = pu * ul_gain;
    if (opts.auto_opt) eff *= profile.o3_efficiency;
    return eff;
}

double modeled_accel_time(const DeviceProfile& profile, std::int64_t flops, std::int64_t bytes_h2d,
                          std::int64_t bytes_d2h, const CodegenOptions& opts,
                          std::int64_t innermost_trip) {
    double transfer = static_cast<double>(bytes_h2d + bytes_d2h) / profile.pcie_bandwidth_Bps;
    double compute = static_cast<double>(flops) /
                     (profile.device_flops_per_s * effective_parallelism(profile, opts, innermost_trip));
    return profile.setup_latency_s + transfer + compute;
}

std::string backend_name(const BackendChoice& b) {
    if (std::holds_alternative<Seq>(b)) return "SEQ";
    if (const auto* j = std::get_if<Jtp>(&b)) return "JTP(" + std::to_string(j->workers) + ")";
    return "SIM_ACCEL";
}

Bindings Bindings::for_kernel(const KernelDef& k) {
    Bindings b;
    b.buffers.assign(k.buffers.size(), nullptr);
    b.scalars.assign(k.scalars.size(), Value::i32(0));
    return b;
}

void Bindings::set_buffer(const KernelDef& k, std::string_view name, HostBuffer* buf) {
    for (size_t i = 0; i < k.buffers.size(); ++i) {
        if (k.buffers[i].name == name) {
            buffers[i] = buf;
            return;
        }
    }
    throw BindingError("no buffer named '" + std::string(name) + "' in kernel '" + k.name + "'");
}

void Bindings::set_scalar(const KernelDef& k, std::string_view name, Value v) {
    for (size_t i = 0; i < k.scalars.size(); ++i) {
        if (k.scalars[i].first == name) {
            scalars[i] = v;
            return;
        }
    }
    throw BindingError("no scalar named '" + std::string(name) + "' in kernel '" + k.name + "'");
}

namespace {

void check_bindings(const KernelDef& k, const Bindings& b) {
    if (b.buffers.size() != k.buffers.size())
        throw BindingError("kernel '" + k.name + "' expects " + std::to_string(k.buffers.size()) +
                           " buffers, got " + std::to_string(b.buffers.size()));
    for (size_t i = 0; i < k.buffers.size(); ++i) {
        const auto& decl = k.buffers[i];
        const HostBuffer* buf = b.buffers[i];
        if (!buf) throw BindingError("buffer '" + decl.name + "' is unbound");
        if (buf->elem() != decl.elem)
            throw BindingError("buffer '" + decl.name + "' element type mismatch");
        if (buf->count() != decl.length)
            throw BindingError("buffer '" + decl.name + "' has " + std::to_string(buf->count()) +
                               " elements, kernel declares " + std::to_string(decl.length));
    }
    if (b.scalars.size() != k.scalars.size())
        throw BindingError("kernel '" + k.name + "' expects " + std::to_string(k.scalars.size()) +
                           " scalars, got " + std::to_string(b.scalars.size()));
    for (size_t i = 0; i < k.scalars.size(); ++i)
        if (b.scalars[i].type != k.scalars[i].second)
            throw BindingError("scalar '" + k.scalars[i].first + "' type mismatch");
}

ScalarBindings scalar_map(const KernelDef& k, const Bindings& b) {
    ScalarBindings m;
    for (size_t i = 0; i < k.scalars.size(); ++i) m[k.scalars[i].first] = b.scalars[i];
    return m;
}

std::vector<BufView> views_of(const Bindings& b) {
    std::vector<BufView> v;
    v.reserve(b.buffers.size());
    for (const HostBuffer* buf : b.buffers) v.push_back(buf->view());
    return v;
}

ExecutionStats base_stats(const KernelDef& k, const Bindings& b, const LaunchRange& range) {
    ExecutionStats st;
    st.flops = flops_measure(k, range, scalar_map(k, b));
    TransferBytes tb = bytes_transferred(k);
    st.bytes_h2d = tb.host_to_device;
    st.bytes_d2h = tb.device_to_host;
    return st;
}

void run_seq(const KernelDef& k, const Bindings& b, const LaunchRange& range) {
    CompiledKernel ck(k);
    auto views = views_of(b);
    ck.run_items(views, b.scalars, range, 0, range.items());
}

void run_jtp(const KernelDef& k, const Bindings& b, const LaunchRange& range, int workers) {
    if (workers < 1) throw BindingError("JTP worker count must be >= 1");
    CompiledKernel ck(k);
    auto views = views_of(b);
    std::int64_t total = range.items();
    std::int64_t chunk = (total + workers - 1) / workers;

    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mu;
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = std::min<std::int64_t>(total, w * chunk);
        std::int64_t hi = std::min<std::int64_t>(total, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, lo, hi] {
            try {
                ck.run_items(views, b.scalars, range, lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> g(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

SimAccelDevice::SimAccelDevice(DeviceProfile profile, AlignMode mode)
    : profile_(std::move(profile)), mode_(mode), epoch_(now_s()) {
    if (!profile_.valid())
        throw BindingError("device profile '" + profile_.name + "' has invalid parameters");
}

ExecutionStats SimAccelDevice::launch(const KernelDef& kernel, Bindings& bindings,
                                      const LaunchRange& range, const CodegenOptions& opts) {
    check_bindings(kernel, bindings);

    std::lock_guard<std::mutex> serialize(dispatch_);
    double wall_start = now_s() - epoch_;

    // Host allocations enter the device 64-byte aligned; auto mode copies,
    // strict mode refuses.
    std::vector<HostBuffer> staged;
    staged.reserve(bindings.buffers.size());
    Bindings dev = bindings;
    auto align = static_cast<std::size_t>(profile_.alignment_bytes);
    for (size_t i = 0; i < bindings.buffers.size(); ++i) {
        HostBuffer* buf = bindings.buffers[i];
        if (buf->address() % align == 0) continue;
        if (mode_ == AlignMode::Strict)
            throw AlignmentError("buffer '" + kernel.buffers[i].name + "' at address " +
                                 std::to_string(buf->address()) + " is not " +
                                 std::to_string(align) + "-byte aligned");
        staged.push_back(align_host_buffer(*buf, align));
        dev.buffers[i] = &staged.back();
    }

    ExecutionStats st = base_stats(kernel, bindings, range);
    run_seq(kernel, dev, range);

    // Copy device results back into the caller's OUT/INOUT buffers.
    for (size_t i = 0; i < bindings.buffers.size(); ++i) {
        if (dev.buffers[i] == bindings.buffers[i]) continue;
        if (kernel.buffers[i].dir == BufferDir::In) continue;
        HostBuffer* src = dev.buffers[i];
        HostBuffer* dst = bindings.buffers[i];
        std::memcpy(dst->elem() == ScalarType::F32 ? static_cast<void*>(dst->f32())
                                                   : static_cast<void*>(dst->i32()),
                    src->elem() == ScalarType::F32 ? static_cast<const void*>(src->f32())
                                                   : static_cast<const void*>(src->i32()),
                    static_cast<size_t>(dst->count()) * 4);
    }

    std::int64_t trip = innermost_trip_count(kernel, scalar_map(kernel, bindings));
    double transfer = static_cast<double>(st.bytes_h2d + st.bytes_d2h) / profile_.pcie_bandwidth_Bps;
    st.modeled_transfer_s = profile_.setup_latency_s + transfer;
    st.modeled_compute_s =
        static_cast<double>(st.flops) /
        (profile_.device_flops_per_s * effective_parallelism(profile_, opts, trip));

    double wall_end = now_s() - epoch_;
    st.wall_time_s = wall_end - wall_start;

    DeviceInterval iv;
    iv.wall_start_s = wall_start;
    iv.wall_end_s = wall_end;
    iv.modeled_start_s = modeled_clock_;
    modeled_clock_ += st.modeled_time_s();
    iv.modeled_end_s = modeled_clock_;
    timeline_.push_back(iv);

    return st;
}

std::vector<LaunchResult> SimAccelDevice::submit_serialized(std::span<Launch> launches) {
    std::vector<LaunchResult> results(launches.size());
    for (size_t i = 0; i < launches.size(); ++i) {
        Launch& l = launches[i];
        try {
            results[i].stats = launch(*l.kernel, *l.bindings, l.range, l.opts);
            results[i].ok = true;
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].error = e.what();
        }
    }
    return results;
}

std::vector<DeviceInterval> SimAccelDevice::timeline() const {
    std::lock_guard<std::mutex> g(dispatch_);
    return timeline_;
}

double SimAccelDevice::modeled_clock_s() const {
    std::lock_guard<std::mutex> g(dispatch_);
    return modeled_clock_;
}

ExecutionStats execute(const KernelDef& kernel, Bindings& bindings, const LaunchRange& range,
                       const BackendChoice& backend, const CodegenOptions& opts) {
    if (!range.valid(kernel.dims))
        throw BindingError("launch range is invalid for a " + std::to_string(kernel.dims) +
                           "-D kernel");
    if (const auto* sim = std::get_if<SimAccel>(&backend)) {
        if (!sim->device) throw BindingError("SIM_ACCEL backend has no device");
        return sim->device->launch(kernel, bindings, range, opts);
    }

    check_bindings(kernel, bindings);
    ExecutionStats st = base_stats(kernel, bindings, range);
    double t0 = now_s();
    if (const auto* jtp = std::get_if<Jtp>(&backend))
        run_jtp(kernel, bindings, range, jtp->workers);
    else
        run_seq(kernel, bindings, range);
    st.wall_time_s = now_s() - t0;
    return st;
}

}  // namespace hetero
