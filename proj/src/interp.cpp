#include "hetero/interp.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <vector>

namespace hetero {

namespace {

union Cell {
    float f;
    std::int32_t i;
    bool b;
};

enum class Op : std::uint8_t {
    LitF, LitI, LitB,
    Load,
    LoadBufF, LoadBufI,
    AddF, SubF, MulF, DivF,
    AddI, SubI, MulI, DivI,
    LtF, LeF, GtF, GeF, EqF, NeF,
    LtI, LeI, GtI, GeI, EqI, NeI,
    EqB, NeB,
    And, Or,
    NegF, NegI, Not,
    Sqrt, Rsqrt, Exp, Log, Fabs, MinF, MaxF, PowF,
    Gid0, Gid1,
    CastIF, CastFI,
};

struct CExpr {
    Op op;
    std::int32_t a = -1, b = -1;  // child node ids
    std::int32_t slot = -1;       // Load
    std::int32_t buf = -1;        // LoadBuf*
    Cell lit{};
};

struct CStmt {
    enum class Kind : std::uint8_t { StoreSlot, StoreBuf, For, If } kind;
    std::int32_t slot = -1;  // StoreSlot target or For loop var
    std::int32_t buf = -1;   // StoreBuf target
    std::int32_t e0 = -1;    // value / index / begin / cond
    std::int32_t e1 = -1;    // value (StoreBuf) / end (For)
    ScalarType value_type = ScalarType::F32;
    std::vector<CStmt> body;       // For / If-then
    std::vector<CStmt> else_body;  // If-else
    std::string where;             // for fault messages
};

std::int32_t cast_f32_to_i32(float f) {
    // Truncate toward zero, saturating; NaN maps to 0. Fixed semantics so
    // all backends agree bit for bit.
    if (std::isnan(f)) return 0;
    if (f >= 2147483648.0f) return INT32_MAX;
    if (f < -2147483648.0f) return INT32_MIN;
    return static_cast<std::int32_t>(f);
}

}  // namespace

struct CompiledKernel::Impl {
    std::string kernel_name;
    std::vector<CExpr> exprs;
    std::vector<CStmt> roots;
    std::int32_t frame_size = 0;
    std::int32_t scalar_count = 0;  // scalars occupy slots [0, scalar_count)
    std::vector<ScalarType> buffer_elems;
    int stmt_counter = 0;

    // --- compilation ---

    std::map<std::string, std::int32_t, std::less<>> slots;
    std::map<std::string, std::int32_t, std::less<>> buffer_ids;
    std::map<std::string, ScalarType, std::less<>> types;
    const KernelDef* k = nullptr;

    std::int32_t add(CExpr e) {
        exprs.push_back(e);
        return static_cast<std::int32_t>(exprs.size() - 1);
    }

    std::int32_t slot_of(const std::string& name, ScalarType t) {
        auto it = slots.find(name);
        if (it != slots.end()) return it->second;
        slots[name] = frame_size;
        types[name] = t;
        return frame_size++;
    }

    ScalarType type_of_expr(const Expr& e) {
        return std::visit(
            [&](const auto& x) -> ScalarType {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Literal>) {
                    return x.value.type;
                } else if constexpr (std::is_same_v<T, VarRef>) {
                    return types.at(x.name);
                } else if constexpr (std::is_same_v<T, BufferIndex>) {
                    return k->find_buffer(x.buffer)->elem;
                } else if constexpr (std::is_same_v<T, Binary>) {
                    if (is_compare(x.op) || is_logic(x.op)) return ScalarType::Bool;
                    return type_of_expr(*x.lhs);
                } else if constexpr (std::is_same_v<T, Unary>) {
                    if (x.op == UnOp::Not) return ScalarType::Bool;
                    return type_of_expr(*x.operand);
                } else if constexpr (std::is_same_v<T, Call>) {
                    return ScalarType::F32;
                } else if constexpr (std::is_same_v<T, GlobalId>) {
                    return ScalarType::I32;
                } else {
                    static_assert(std::is_same_v<T, Cast>);
                    return x.to;
                }
            },
            e.node);
    }

    std::int32_t compile_expr(const Expr& e) {
        return std::visit(
            [&](const auto& x) -> std::int32_t {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Literal>) {
                    CExpr c{};
                    switch (x.value.type) {
                        case ScalarType::F32: c.op = Op::LitF; c.lit.f = x.value.f; break;
                        case ScalarType::I32: c.op = Op::LitI; c.lit.i = x.value.i; break;
                        case ScalarType::Bool: c.op = Op::LitB; c.lit.b = x.value.b; break;
                    }
                    return add(c);
                } else if constexpr (std::is_same_v<T, VarRef>) {
                    CExpr c{};
                    c.op = Op::Load;
                    c.slot = slots.at(x.name);
                    return add(c);
                } else if constexpr (std::is_same_v<T, BufferIndex>) {
                    CExpr c{};
                    c.op = k->find_buffer(x.buffer)->elem == ScalarType::F32 ? Op::LoadBufF
                                                                             : Op::LoadBufI;
                    c.buf = buffer_ids.at(x.buffer);
                    c.a = compile_expr(*x.index);
                    return add(c);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    ScalarType ot = type_of_expr(*x.lhs);
                    CExpr c{};
                    c.a = compile_expr(*x.lhs);
                    c.b = compile_expr(*x.rhs);
                    bool f = ot == ScalarType::F32;
                    switch (x.op) {
                        case BinOp::Add: c.op = f ? Op::AddF : Op::AddI; break;
                        case BinOp::Sub: c.op = f ? Op::SubF : Op::SubI; break;
                        case BinOp::Mul: c.op = f ? Op::MulF : Op::MulI; break;
                        case BinOp::Div: c.op = f ? Op::DivF : Op::DivI; break;
                        case BinOp::Lt: c.op = f ? Op::LtF : Op::LtI; break;
                        case BinOp::Le: c.op = f ? Op::LeF : Op::LeI; break;
                        case BinOp::Gt: c.op = f ? Op::GtF : Op::GtI; break;
                        case BinOp::Ge: c.op = f ? Op::GeF : Op::GeI; break;
                        case BinOp::Eq:
                            c.op = ot == ScalarType::Bool ? Op::EqB : (f ? Op::EqF : Op::EqI);
                            break;
                        case BinOp::Ne:
                            c.op = ot == ScalarType::Bool ? Op::NeB : (f ? Op::NeF : Op::NeI);
                            break;
                        case BinOp::And: c.op = Op::And; break;
                        case BinOp::Or: c.op = Op::Or; break;
                    }
                    return add(c);
                } else if constexpr (std::is_same_v<T, Unary>) {
                    CExpr c{};
                    c.a = compile_expr(*x.operand);
                    if (x.op == UnOp::Not)
                        c.op = Op::Not;
                    else
                        c.op = type_of_expr(*x.operand) == ScalarType::F32 ? Op::NegF : Op::NegI;
                    return add(c);
                } else if constexpr (std::is_same_v<T, Call>) {
                    CExpr c{};
                    c.a = compile_expr(*x.args[0]);
                    if (x.args.size() > 1) c.b = compile_expr(*x.args[1]);
                    switch (x.fn) {
                        case Intrinsic::Sqrt: c.op = Op::Sqrt; break;
                        case Intrinsic::Rsqrt: c.op = Op::Rsqrt; break;
                        case Intrinsic::Exp: c.op = Op::Exp; break;
                        case Intrinsic::Log: c.op = Op::Log; break;
                        case Intrinsic::Fabs: c.op = Op::Fabs; break;
                        case Intrinsic::Min: c.op = Op::MinF; break;
                        case Intrinsic::Max: c.op = Op::MaxF; break;
                        case Intrinsic::Pow: c.op = Op::PowF; break;
                    }
                    return add(c);
                } else if constexpr (std::is_same_v<T, GlobalId>) {
                    CExpr c{};
                    c.op = x.dim == 0 ? Op::Gid0 : Op::Gid1;
                    return add(c);
                } else {
                    static_assert(std::is_same_v<T, Cast>);
                    CExpr c{};
                    c.a = compile_expr(*x.operand);
                    c.op = x.to == ScalarType::F32 ? Op::CastIF : Op::CastFI;
                    return add(c);
                }
            },
            e.node);
    }

    std::vector<CStmt> compile_body(const std::vector<StmtPtr>& body) {
        std::vector<CStmt> out;
        out.reserve(body.size());
        for (const auto& sp : body) {
            int ordinal = stmt_counter++;
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        CStmt c{};
                        c.kind = CStmt::Kind::StoreSlot;
                        c.e0 = compile_expr(*s.init);
                        c.slot = slot_of(s.name, s.type);
                        c.value_type = s.type;
                        c.where = "#" + std::to_string(ordinal) + " decl " + s.name;
                        out.push_back(std::move(c));
                    } else if constexpr (std::is_same_v<T, AssignVar>) {
                        CStmt c{};
                        c.kind = CStmt::Kind::StoreSlot;
                        c.e0 = compile_expr(*s.value);
                        c.slot = slots.at(s.name);
                        c.value_type = types.at(s.name);
                        c.where = "#" + std::to_string(ordinal) + " assign " + s.name;
                        out.push_back(std::move(c));
                    } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                        CStmt c{};
                        c.kind = CStmt::Kind::StoreBuf;
                        c.buf = buffer_ids.at(s.buffer);
                        c.e0 = compile_expr(*s.index);
                        c.e1 = compile_expr(*s.value);
                        c.value_type = k->find_buffer(s.buffer)->elem;
                        c.where = "#" + std::to_string(ordinal) + " store " + s.buffer;
                        out.push_back(std::move(c));
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        CStmt c{};
                        c.kind = CStmt::Kind::For;
                        c.e0 = compile_expr(*s.begin);
                        c.e1 = compile_expr(*s.end);
                        c.slot = slot_of(s.var, ScalarType::I32);
                        c.where = "#" + std::to_string(ordinal) + " for " + s.var;
                        c.body = compile_body(s.body);
                        out.push_back(std::move(c));
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        CStmt c{};
                        c.kind = CStmt::Kind::If;
                        c.e0 = compile_expr(*s.cond);
                        c.where = "#" + std::to_string(ordinal) + " if";
                        c.body = compile_body(s.then_body);
                        c.else_body = compile_body(s.else_body);
                        out.push_back(std::move(c));
                    } else {
                        static_assert(std::is_same_v<T, Block>);
                        auto inner = compile_body(s.body);
                        for (auto& cs : inner) out.push_back(std::move(cs));
                    }
                },
                sp->node);
        }
        return out;
    }
};

CompiledKernel::CompiledKernel(const KernelDef& kernel) : impl_(std::make_unique<Impl>()) {
    impl_->kernel_name = kernel.name;
    impl_->k = &kernel;
    for (size_t i = 0; i < kernel.buffers.size(); ++i) {
        impl_->buffer_ids[kernel.buffers[i].name] = static_cast<std::int32_t>(i);
        impl_->buffer_elems.push_back(kernel.buffers[i].elem);
    }
    for (const auto& [name, type] : kernel.scalars) impl_->slot_of(name, type);
    impl_->scalar_count = impl_->frame_size;
    impl_->roots = impl_->compile_body(kernel.body);
    impl_->k = nullptr;
}

CompiledKernel::~CompiledKernel() = default;
CompiledKernel::CompiledKernel(CompiledKernel&&) noexcept = default;
CompiledKernel& CompiledKernel::operator=(CompiledKernel&&) noexcept = default;

namespace {

// Per-thread evaluation state. One Machine per worker; the compiled program
// and buffer views are shared.
template <bool Count>
struct Machine {
    const CompiledKernel::Impl& p;
    std::span<const BufView> bufs;
    std::vector<Cell> frame;
    std::int32_t gid0 = 0, gid1 = 0;
    std::int64_t ops = 0;

    Machine(const CompiledKernel::Impl& prog, std::span<const BufView> buffers,
            std::span<const Value> scalars)
        : p(prog), bufs(buffers), frame(static_cast<size_t>(prog.frame_size)) {
        for (std::int32_t s = 0; s < prog.scalar_count; ++s) {
            const Value& v = scalars[static_cast<size_t>(s)];
            switch (v.type) {
                case ScalarType::F32: frame[s].f = v.f; break;
                case ScalarType::I32: frame[s].i = v.i; break;
                case ScalarType::Bool: frame[s].b = v.b; break;
            }
        }
    }

    [[noreturn]] void fault(const CStmt* ctx, const std::string& what) const {
        std::ostringstream os;
        os << "kernel '" << p.kernel_name << "', work item (" << gid0 << "," << gid1 << ")";
        if (ctx) os << ", stmt " << ctx->where;
        os << ": " << what;
        throw ExecFault(os.str());
    }

    std::int64_t checked_index(const CExpr& n, const CStmt* ctx) {
        std::int32_t idx = eval_i(n.a, ctx);
        const BufView& b = bufs[static_cast<size_t>(n.buf)];
        if (idx < 0 || idx >= b.len)
            fault(ctx, "index " + std::to_string(idx) + " out of bounds [0," +
                           std::to_string(b.len) + ")");
        return idx;
    }

    float eval_f(std::int32_t id, const CStmt* ctx) {
        const CExpr& n = p.exprs[static_cast<size_t>(id)];
        switch (n.op) {
            case Op::LitF: return n.lit.f;
            case Op::Load: return frame[static_cast<size_t>(n.slot)].f;
            case Op::LoadBufF: {
                std::int64_t i = checked_index(n, ctx);
                return static_cast<const float*>(bufs[static_cast<size_t>(n.buf)].data)[i];
            }
            case Op::AddF: { float r = eval_f(n.a, ctx) + eval_f(n.b, ctx); if constexpr (Count) ++ops; return r; }
            case Op::SubF: { float r = eval_f(n.a, ctx) - eval_f(n.b, ctx); if constexpr (Count) ++ops; return r; }
            case Op::MulF: { float r = eval_f(n.a, ctx) * eval_f(n.b, ctx); if constexpr (Count) ++ops; return r; }
            case Op::DivF: { float r = eval_f(n.a, ctx) / eval_f(n.b, ctx); if constexpr (Count) ++ops; return r; }
            case Op::NegF: { float r = -eval_f(n.a, ctx); if constexpr (Count) ++ops; return r; }
            case Op::Sqrt: { float r = std::sqrt(eval_f(n.a, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::Rsqrt: { float r = 1.0f / std::sqrt(eval_f(n.a, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::Exp: { float r = std::exp(eval_f(n.a, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::Log: { float r = std::log(eval_f(n.a, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::Fabs: { float r = std::fabs(eval_f(n.a, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::MinF: { float r = std::fmin(eval_f(n.a, ctx), eval_f(n.b, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::MaxF: { float r = std::fmax(eval_f(n.a, ctx), eval_f(n.b, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::PowF: { float r = std::pow(eval_f(n.a, ctx), eval_f(n.b, ctx)); if constexpr (Count) ++ops; return r; }
            case Op::CastIF: return static_cast<float>(eval_i(n.a, ctx));
            default: fault(ctx, "internal: non-f32 node evaluated as f32");
        }
    }

    std::int32_t eval_i(std::int32_t id, const CStmt* ctx) {
        const CExpr& n = p.exprs[static_cast<size_t>(id)];
        switch (n.op) {
            case Op::LitI: return n.lit.i;
            case Op::Load: return frame[static_cast<size_t>(n.slot)].i;
            case Op::LoadBufI: {
                std::int64_t i = checked_index(n, ctx);
                return static_cast<const std::int32_t*>(bufs[static_cast<size_t>(n.buf)].data)[i];
            }
            // Wrapping two's-complement arithmetic.
            case Op::AddI: return static_cast<std::int32_t>(static_cast<std::uint32_t>(eval_i(n.a, ctx)) + static_cast<std::uint32_t>(eval_i(n.b, ctx)));
            case Op::SubI: return static_cast<std::int32_t>(static_cast<std::uint32_t>(eval_i(n.a, ctx)) - static_cast<std::uint32_t>(eval_i(n.b, ctx)));
            case Op::MulI: return static_cast<std::int32_t>(static_cast<std::uint32_t>(eval_i(n.a, ctx)) * static_cast<std::uint32_t>(eval_i(n.b, ctx)));
            case Op::DivI: {
                std::int32_t d = eval_i(n.b, ctx);
                if (d == 0) fault(ctx, "integer division by zero");
                std::int32_t nu = eval_i(n.a, ctx);
                if (nu == INT32_MIN && d == -1) return INT32_MIN;
                return nu / d;
            }
            case Op::NegI: return static_cast<std::int32_t>(-static_cast<std::uint32_t>(eval_i(n.a, ctx)));
            case Op::Gid0: return gid0;
            case Op::Gid1: return gid1;
            case Op::CastFI: return cast_f32_to_i32(eval_f(n.a, ctx));
            default: fault(ctx, "internal: non-i32 node evaluated as i32");
        }
    }

    bool eval_b(std::int32_t id, const CStmt* ctx) {
        const CExpr& n = p.exprs[static_cast<size_t>(id)];
        switch (n.op) {
            case Op::LitB: return n.lit.b;
            case Op::Load: return frame[static_cast<size_t>(n.slot)].b;
            case Op::LtF: return eval_f(n.a, ctx) < eval_f(n.b, ctx);
            case Op::LeF: return eval_f(n.a, ctx) <= eval_f(n.b, ctx);
            case Op::GtF: return eval_f(n.a, ctx) > eval_f(n.b, ctx);
            case Op::GeF: return eval_f(n.a, ctx) >= eval_f(n.b, ctx);
            case Op::EqF: return eval_f(n.a, ctx) == eval_f(n.b, ctx);
            case Op::NeF: return eval_f(n.a, ctx) != eval_f(n.b, ctx);
            case Op::LtI: return eval_i(n.a, ctx) < eval_i(n.b, ctx);
            case Op::LeI: return eval_i(n.a, ctx) <= eval_i(n.b, ctx);
            case Op::GtI: return eval_i(n.a, ctx) > eval_i(n.b, ctx);
            case Op::GeI: return eval_i(n.a, ctx) >= eval_i(n.b, ctx);
            case Op::EqI: return eval_i(n.a, ctx) == eval_i(n.b, ctx);
            case Op::NeI: return eval_i(n.a, ctx) != eval_i(n.b, ctx);
            case Op::EqB: return eval_b(n.a, ctx) == eval_b(n.b, ctx);
            case Op::NeB: return eval_b(n.a, ctx) != eval_b(n.b, ctx);
            case Op::And: return eval_b(n.a, ctx) && eval_b(n.b, ctx);
            case Op::Or: return eval_b(n.a, ctx) || eval_b(n.b, ctx);
            case Op::Not: return !eval_b(n.a, ctx);
            default: fault(ctx, "internal: non-bool node evaluated as bool");
        }
    }

    void run_body(const std::vector<CStmt>& body) {
        for (const CStmt& s : body) {
            switch (s.kind) {
                case CStmt::Kind::StoreSlot: {
                    Cell& c = frame[static_cast<size_t>(s.slot)];
                    switch (s.value_type) {
                        case ScalarType::F32: c.f = eval_f(s.e0, &s); break;
                        case ScalarType::I32: c.i = eval_i(s.e0, &s); break;
                        case ScalarType::Bool: c.b = eval_b(s.e0, &s); break;
                    }
                    break;
                }
                case CStmt::Kind::StoreBuf: {
                    const BufView& b = bufs[static_cast<size_t>(s.buf)];
                    std::int32_t idx = eval_i(s.e0, &s);
                    if (idx < 0 || idx >= b.len)
                        fault(&s, "index " + std::to_string(idx) + " out of bounds [0," +
                                      std::to_string(b.len) + ")");
                    if (s.value_type == ScalarType::F32)
                        static_cast<float*>(b.data)[idx] = eval_f(s.e1, &s);
                    else
                        static_cast<std::int32_t*>(b.data)[idx] = eval_i(s.e1, &s);
                    break;
                }
                case CStmt::Kind::For: {
                    std::int32_t v = eval_i(s.e0, &s);
                    const std::int32_t end = eval_i(s.e1, &s);
                    Cell& c = frame[static_cast<size_t>(s.slot)];
                    for (; v < end; ++v) {
                        c.i = v;
                        run_body(s.body);
                    }
                    break;
                }
                case CStmt::Kind::If:
                    if (eval_b(s.e0, &s))
                        run_body(s.body);
                    else
                        run_body(s.else_body);
                    break;
            }
        }
    }
};

template <bool Count>
std::int64_t run_range(const CompiledKernel::Impl& p, std::span<const BufView> bufs,
                       std::span<const Value> scalars, const LaunchRange& range,
                       std::int64_t first, std::int64_t last) {
    Machine<Count> m(p, bufs, scalars);
    for (std::int64_t item = first; item < last; ++item) {
        m.gid0 = static_cast<std::int32_t>(item % range.g0);
        m.gid1 = static_cast<std::int32_t>(item / range.g0);
        m.run_body(p.roots);
    }
    return m.ops;
}

}  // namespace

void CompiledKernel::run_items(std::span<const BufView> buffers, std::span<const Value> scalars,
                               const LaunchRange& range, std::int64_t first, std::int64_t last,
                               std::int64_t* f32_op_counter) const {
    if (f32_op_counter)
        *f32_op_counter += run_range<true>(*impl_, buffers, scalars, range, first, last);
    else
        run_range<false>(*impl_, buffers, scalars, range, first, last);
}

void interpret(const KernelDef& kernel, std::span<const BufView> buffers,
               std::span<const Value> scalars, const LaunchRange& range,
               std::int64_t* f32_op_counter) {
    CompiledKernel ck(kernel);
    ck.run_items(buffers, scalars, range, 0, range.items(), f32_op_counter);
}

}  // namespace hetero
