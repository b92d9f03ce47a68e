#include "hetero/kernels.hpp"

#include <cstring>

#include "hetero/rng.hpp"

namespace hetero {

using namespace ir;

KernelDef vecadd_kernel(std::int64_t n) {
    KernelDef k;
    k.name = "vecadd";
    k.dims = 1;
    k.buffers = {{"inA", ScalarType::F32, n, BufferDir::In},
                 {"inB", ScalarType::F32, n, BufferDir::In},
                 {"result", ScalarType::F32, n, BufferDir::Out}};
    k.body = {
        decl("i", ScalarType::I32, global_id(0)),
        store("result", var("i"), add(index("inA", var("i")), index("inB", var("i")))),
    };
    return k;
}

KernelDef mandelbrot_kernel(std::int64_t width, std::int64_t height, std::int32_t max_iter) {
    KernelDef k;
    k.name = "mandelbrot";
    k.dims = 2;
    k.buffers = {{"out", ScalarType::I32, width * height, BufferDir::Out}};
    k.scalars = {{"x0", ScalarType::F32},
                 {"y0", ScalarType::F32},
                 {"dx", ScalarType::F32},
                 {"dy", ScalarType::F32}};
    k.body = {
        decl("px", ScalarType::I32, global_id(0)),
        decl("py", ScalarType::I32, global_id(1)),
        decl("cx", ScalarType::F32, add(var("x0"), mul(cast(ScalarType::F32, var("px")), var("dx")))),
        decl("cy", ScalarType::F32, add(var("y0"), mul(cast(ScalarType::F32, var("py")), var("dy")))),
        decl("zx", ScalarType::F32, lit_f32(0.0f)),
        decl("zy", ScalarType::F32, lit_f32(0.0f)),
        decl("count", ScalarType::I32, lit_i32(0)),
        decl("escaped", ScalarType::Bool, lit_bool(false)),
        for_loop(
            "it", lit_i32(0), lit_i32(max_iter),
            {if_then(
                logic_not(var("escaped")),
                {
                    decl("zx2", ScalarType::F32, mul(var("zx"), var("zx"))),
                    decl("zy2", ScalarType::F32, mul(var("zy"), var("zy"))),
                    if_else(gt(add(var("zx2"), var("zy2")), lit_f32(4.0f)),
                            {assign("escaped", lit_bool(true))},
                            {
                                decl("xt", ScalarType::F32,
                                     add(sub(var("zx2"), var("zy2")), var("cx"))),
                                assign("zy", add(mul(mul(lit_f32(2.0f), var("zx")), var("zy")),
                                                 var("cy"))),
                                assign("zx", var("xt")),
                                assign("count", add(var("count"), lit_i32(1))),
                            }),
                })}),
        store("out",
              add(mul(var("py"), lit_i32(static_cast<std::int32_t>(width))), var("px")),
              var("count")),
    };
    return k;
}

namespace {

// Appends the statements computing the standard normal CDF of local `d_in`
// into local `<prefix>_w`. Abramowitz-Stegun 26.2.17.
void append_cnd(std::vector<StmtPtr>& body, const std::string& prefix, const std::string& d_in) {
    auto n = [&](const char* base) { return prefix + "_" + base; };
    body.push_back(decl(n("ad"), ScalarType::F32, fabs(var(d_in))));
    body.push_back(decl(n("k"), ScalarType::F32,
                        div(lit_f32(1.0f),
                            add(lit_f32(1.0f), mul(lit_f32(0.2316419f), var(n("ad")))))));
    // Horner form of b1*k + b2*k^2 + ... + b5*k^5
    ExprPtr kk = var(n("k"));
    ExprPtr poly = mul(kk, add(lit_f32(0.319381530f),
                        mul(kk, add(lit_f32(-0.356563782f),
                             mul(kk, add(lit_f32(1.781477937f),
                                  mul(kk, add(lit_f32(-1.821255978f),
                                       mul(kk, lit_f32(1.330274429f))))))))));
    body.push_back(decl(n("poly"), ScalarType::F32, std::move(poly)));
    body.push_back(decl(n("pdf"), ScalarType::F32,
                        mul(lit_f32(0.39894228f),
                            exp(mul(mul(lit_f32(-0.5f), var(d_in)), var(d_in))))));
    body.push_back(decl(n("w"), ScalarType::F32,
                        sub(lit_f32(1.0f), mul(var(n("pdf")), var(n("poly"))))));
    body.push_back(if_then(lt(var(d_in), lit_f32(0.0f)),
                           {assign(n("w"), sub(lit_f32(1.0f), var(n("w"))))}));
}

}  // namespace

KernelDef black_scholes_kernel(std::int64_t n) {
    KernelDef k;
    k.name = "black_scholes";
    k.dims = 1;
    k.buffers = {{"sprice", ScalarType::F32, n, BufferDir::In},
                 {"strike", ScalarType::F32, n, BufferDir::In},
                 {"expiry", ScalarType::F32, n, BufferDir::In},
                 {"rate", ScalarType::F32, n, BufferDir::In},
                 {"vol", ScalarType::F32, n, BufferDir::In},
                 {"callprice", ScalarType::F32, n, BufferDir::Out},
                 {"putprice", ScalarType::F32, n, BufferDir::Out}};
    std::vector<StmtPtr> b;
    b.push_back(decl("i", ScalarType::I32, global_id(0)));
    b.push_back(decl("s", ScalarType::F32, index("sprice", var("i"))));
    b.push_back(decl("x", ScalarType::F32, index("strike", var("i"))));
    b.push_back(decl("t", ScalarType::F32, index("expiry", var("i"))));
    b.push_back(decl("r", ScalarType::F32, index("rate", var("i"))));
    b.push_back(decl("v", ScalarType::F32, index("vol", var("i"))));
    b.push_back(decl("sqt", ScalarType::F32, sqrt(var("t"))));
    b.push_back(decl("vst", ScalarType::F32, mul(var("v"), var("sqt"))));
    b.push_back(decl(
        "d1", ScalarType::F32,
        div(add(log(div(var("s"), var("x"))),
                mul(add(var("r"), mul(mul(lit_f32(0.5f), var("v")), var("v"))), var("t"))),
            var("vst"))));
    b.push_back(decl("d2", ScalarType::F32, sub(var("d1"), var("vst"))));
    append_cnd(b, "c1", "d1");
    append_cnd(b, "c2", "d2");
    b.push_back(decl("ert", ScalarType::F32, exp(neg(mul(var("r"), var("t"))))));
    b.push_back(decl("xert", ScalarType::F32, mul(var("x"), var("ert"))));
    b.push_back(store("callprice", var("i"),
                      sub(mul(var("s"), var("c1_w")), mul(var("xert"), var("c2_w")))));
    // The put leg re-evaluates the CDF at -d; put-call parity then holds to
    // rounding instead of by construction.
    b.push_back(decl("nd1", ScalarType::F32, neg(var("d1"))));
    b.push_back(decl("nd2", ScalarType::F32, neg(var("d2"))));
    append_cnd(b, "p1", "nd2");
    append_cnd(b, "p2", "nd1");
    b.push_back(store("putprice", var("i"),
                      sub(mul(var("xert"), var("p1_w")), mul(var("s"), var("p2_w")))));
    k.body = std::move(b);
    return k;
}

KernelDef nbody_step_kernel(std::int64_t n) {
    KernelDef k;
    k.name = "nbody_step";
    k.dims = 1;
    k.buffers = {{"px", ScalarType::F32, n, BufferDir::In},
                 {"py", ScalarType::F32, n, BufferDir::In},
                 {"pz", ScalarType::F32, n, BufferDir::In},
                 {"mass", ScalarType::F32, n, BufferDir::In},
                 {"vx", ScalarType::F32, n, BufferDir::In},
                 {"vy", ScalarType::F32, n, BufferDir::In},
                 {"vz", ScalarType::F32, n, BufferDir::In},
                 {"opx", ScalarType::F32, n, BufferDir::Out},
                 {"opy", ScalarType::F32, n, BufferDir::Out},
                 {"opz", ScalarType::F32, n, BufferDir::Out},
                 {"ovx", ScalarType::F32, n, BufferDir::Out},
                 {"ovy", ScalarType::F32, n, BufferDir::Out},
                 {"ovz", ScalarType::F32, n, BufferDir::Out}};
    k.scalars = {{"dt", ScalarType::F32}, {"eps", ScalarType::F32}};
    k.body = {
        decl("i", ScalarType::I32, global_id(0)),
        decl("xi", ScalarType::F32, index("px", var("i"))),
        decl("yi", ScalarType::F32, index("py", var("i"))),
        decl("zi", ScalarType::F32, index("pz", var("i"))),
        decl("ax", ScalarType::F32, lit_f32(0.0f)),
        decl("ay", ScalarType::F32, lit_f32(0.0f)),
        decl("az", ScalarType::F32, lit_f32(0.0f)),
        decl("eps2", ScalarType::F32, mul(var("eps"), var("eps"))),
        for_loop(
            "j", lit_i32(0), lit_i32(static_cast<std::int32_t>(n)),
            {
                decl("dx", ScalarType::F32, sub(index("px", var("j")), var("xi"))),
                decl("dy", ScalarType::F32, sub(index("py", var("j")), var("yi"))),
                decl("dz", ScalarType::F32, sub(index("pz", var("j")), var("zi"))),
                // j == i contributes nothing: the softened distance keeps
                // the denominator finite and dx = dy = dz = 0.
                decl("r2", ScalarType::F32,
                     add(add(add(mul(var("dx"), var("dx")), mul(var("dy"), var("dy"))),
                             mul(var("dz"), var("dz"))),
                         var("eps2"))),
                decl("inv", ScalarType::F32, rsqrt(var("r2"))),
                decl("inv3", ScalarType::F32, mul(mul(var("inv"), var("inv")), var("inv"))),
                decl("f", ScalarType::F32, mul(index("mass", var("j")), var("inv3"))),
                assign("ax", add(var("ax"), mul(var("dx"), var("f")))),
                assign("ay", add(var("ay"), mul(var("dy"), var("f")))),
                assign("az", add(var("az"), mul(var("dz"), var("f")))),
            }),
        decl("nvx", ScalarType::F32, add(index("vx", var("i")), mul(var("ax"), var("dt")))),
        decl("nvy", ScalarType::F32, add(index("vy", var("i")), mul(var("ay"), var("dt")))),
        decl("nvz", ScalarType::F32, add(index("vz", var("i")), mul(var("az"), var("dt")))),
        store("opx", var("i"), add(var("xi"), mul(var("nvx"), var("dt")))),
        store("opy", var("i"), add(var("yi"), mul(var("nvy"), var("dt")))),
        store("opz", var("i"), add(var("zi"), mul(var("nvz"), var("dt")))),
        store("ovx", var("i"), var("nvx")),
        store("ovy", var("i"), var("nvy")),
        store("ovz", var("i"), var("nvz")),
    };
    return k;
}

KernelDef kmeans_map_kernel(std::int64_t n, std::int64_t k_centers, std::int64_t d) {
    KernelDef k;
    k.name = "kmeans_map";
    k.dims = 1;
    k.buffers = {{"points", ScalarType::F32, n * d, BufferDir::In},
                 {"centroids", ScalarType::F32, k_centers * d, BufferDir::In},
                 {"labels", ScalarType::I32, n, BufferDir::Out}};
    k.scalars = {{"k", ScalarType::I32}, {"d", ScalarType::I32}};
    k.body = {
        decl("i", ScalarType::I32, global_id(0)),
        decl("base", ScalarType::I32, mul(var("i"), var("d"))),
        decl("best", ScalarType::F32, lit_f32(3.402823466e+38f)),
        decl("bestIdx", ScalarType::I32, lit_i32(0)),
        for_loop(
            "c", lit_i32(0), var("k"),
            {
                decl("cbase", ScalarType::I32, mul(var("c"), var("d"))),
                decl("dist", ScalarType::F32, lit_f32(0.0f)),
                for_loop("t", lit_i32(0), var("d"),
                         {
                             decl("diff", ScalarType::F32,
                                  sub(index("points", add(var("base"), var("t"))),
                                      index("centroids", add(var("cbase"), var("t"))))),
                             assign("dist", add(var("dist"), mul(var("diff"), var("diff")))),
                         }),
                // strict < keeps the lowest index on ties
                if_then(lt(var("dist"), var("best")),
                        {assign("best", var("dist")), assign("bestIdx", var("c"))}),
            }),
        store("labels", var("i"), var("bestIdx")),
    };
    return k;
}

Bindings PreparedLaunch::bindings() {
    Bindings b = Bindings::for_kernel(kernel);
    for (size_t i = 0; i < buffers.size(); ++i) b.buffers[i] = &buffers[i];
    b.scalars = scalars;
    return b;
}

PreparedLaunch prepare_vecadd(std::int64_t n, std::uint32_t seed) {
    PreparedLaunch p;
    p.kernel = vecadd_kernel(n);
    p.range = {n, 1};
    std::mt19937 rng(seed);
    HostBuffer a(ScalarType::F32, n), b(ScalarType::F32, n), out(ScalarType::F32, n);
    for (std::int64_t i = 0; i < n; ++i) a.f32()[i] = uniform_float(rng, -1000.0f, 1000.0f);
    for (std::int64_t i = 0; i < n; ++i) b.f32()[i] = uniform_float(rng, -1000.0f, 1000.0f);
    p.buffers.push_back(std::move(a));
    p.buffers.push_back(std::move(b));
    p.buffers.push_back(std::move(out));
    return p;
}

PreparedLaunch prepare_mandelbrot(std::int64_t width, std::int64_t height, std::int32_t max_iter,
                                  const Viewport& view) {
    PreparedLaunch p;
    p.kernel = mandelbrot_kernel(width, height, max_iter);
    p.range = {width, height};
    p.buffers.emplace_back(ScalarType::I32, width * height);
    p.scalars = {Value::f32(view.x0), Value::f32(view.y0),
                 Value::f32(view.width / static_cast<float>(width)),
                 Value::f32(view.height / static_cast<float>(height))};
    return p;
}

PreparedLaunch prepare_black_scholes(std::int64_t n, std::uint32_t seed) {
    PreparedLaunch p;
    p.kernel = black_scholes_kernel(n);
    p.range = {n, 1};
    std::mt19937 rng(seed);
    HostBuffer s(ScalarType::F32, n), x(ScalarType::F32, n), t(ScalarType::F32, n),
        r(ScalarType::F32, n), v(ScalarType::F32, n);
    for (std::int64_t i = 0; i < n; ++i) s.f32()[i] = uniform_float(rng, 10.0f, 100.0f);
    for (std::int64_t i = 0; i < n; ++i) x.f32()[i] = uniform_float(rng, 10.0f, 100.0f);
    for (std::int64_t i = 0; i < n; ++i) t.f32()[i] = uniform_float(rng, 0.1f, 5.0f);
    for (std::int64_t i = 0; i < n; ++i) r.f32()[i] = uniform_float(rng, 0.01f, 0.08f);
    for (std::int64_t i = 0; i < n; ++i) v.f32()[i] = uniform_float(rng, 0.05f, 0.6f);
    p.buffers.push_back(std::move(s));
    p.buffers.push_back(std::move(x));
    p.buffers.push_back(std::move(t));
    p.buffers.push_back(std::move(r));
    p.buffers.push_back(std::move(v));
    p.buffers.emplace_back(ScalarType::F32, n);
    p.buffers.emplace_back(ScalarType::F32, n);
    return p;
}

PreparedLaunch prepare_nbody(std::int64_t n, float dt, float eps, std::uint32_t seed) {
    PreparedLaunch p;
    p.kernel = nbody_step_kernel(n);
    p.range = {n, 1};
    std::mt19937 rng(seed);
    for (int which = 0; which < 13; ++which) p.buffers.emplace_back(ScalarType::F32, n);
    for (std::int64_t i = 0; i < n; ++i) {
        p.buffers[0].f32()[i] = uniform_float(rng, -1.0f, 1.0f);   // px
        p.buffers[1].f32()[i] = uniform_float(rng, -1.0f, 1.0f);   // py
        p.buffers[2].f32()[i] = uniform_float(rng, -1.0f, 1.0f);   // pz
        p.buffers[3].f32()[i] = uniform_float(rng, 0.1f, 1.0f);    // mass
        p.buffers[4].f32()[i] = uniform_float(rng, -0.1f, 0.1f);   // vx
        p.buffers[5].f32()[i] = uniform_float(rng, -0.1f, 0.1f);   // vy
        p.buffers[6].f32()[i] = uniform_float(rng, -0.1f, 0.1f);   // vz
    }
    p.scalars = {Value::f32(dt), Value::f32(eps)};
    return p;
}

void nbody_advance(PreparedLaunch& nb) {
    const std::int64_t n = nb.range.g0;
    // opx..ovz (7..12) -> px..pz (0..2), vx..vz (4..6)
    static const int src[] = {7, 8, 9, 10, 11, 12};
    static const int dst[] = {0, 1, 2, 4, 5, 6};
    for (int i = 0; i < 6; ++i)
        std::memcpy(nb.buffers[dst[i]].f32(), nb.buffers[src[i]].f32(),
                    static_cast<size_t>(n) * sizeof(float));
}

}  // namespace hetero
