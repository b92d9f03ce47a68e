#include "hetero/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace hetero {

std::string ValidationReport::summary() const {
    if (ok()) return "ok";
    std::ostringstream os;
    os << violations.size() << " violation(s):";
    for (const auto& v : violations) os << "\n  - " << v.message;
    return os.str();
}

namespace {

struct Scope {
    // name -> type for scalars, locals, and loop vars; one flat namespace.
    std::vector<std::pair<std::string, ScalarType>> names;
    std::set<std::string> loop_vars;
};

class Validator {
public:
    explicit Validator(const KernelDef& k) : k_(k) {}

    ValidationReport run() {
        check_decls();
        Scope scope;
        for (const auto& [name, type] : k_.scalars) scope.names.emplace_back(name, type);
        check_body(k_.body, scope);
        check_out_writes();
        return std::move(report_);
    }

private:
    void fail(ViolationKind kind, std::string msg) {
        report_.violations.push_back({kind, std::move(msg)});
    }

    void check_decls() {
        if (k_.dims != 1 && k_.dims != 2)
            fail(ViolationKind::BadDims, "kernel dims must be 1 or 2, got " + std::to_string(k_.dims));
        std::set<std::string> seen;
        auto claim = [&](const std::string& n, const char* what) {
            if (!seen.insert(n).second)
                fail(ViolationKind::DuplicateName, std::string(what) + " '" + n + "' duplicates another name");
        };
        for (const auto& b : k_.buffers) {
            claim(b.name, "buffer");
            if (b.elem == ScalarType::Bool)
                fail(ViolationKind::BadBufferElem, "buffer '" + b.name + "' has bool elements; only f32/i32 buffers are supported");
            if (b.length < 1)
                fail(ViolationKind::BadLength, "buffer '" + b.name + "' has length " + std::to_string(b.length));
        }
        for (const auto& [n, t] : k_.scalars) {
            (void)t;
            claim(n, "scalar");
        }
        collect_local_names(k_.body, seen);
    }

    // Locals share the kernel-wide namespace: unrolling and slot allocation
    // rely on every declared name being unique.
    void collect_local_names(const std::vector<StmtPtr>& body, std::set<std::string>& seen) {
        for (const auto& sp : body) {
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        if (!seen.insert(s.name).second)
                            fail(ViolationKind::DuplicateName, "local '" + s.name + "' duplicates another name");
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        if (!seen.insert(s.var).second)
                            fail(ViolationKind::DuplicateName, "loop var '" + s.var + "' duplicates another name");
                        collect_local_names(s.body, seen);
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        collect_local_names(s.then_body, seen);
                        collect_local_names(s.else_body, seen);
                    } else if constexpr (std::is_same_v<T, Block>) {
                        collect_local_names(s.body, seen);
                    }
                },
                sp->node);
        }
    }

    std::optional<ScalarType> lookup(const Scope& scope, const std::string& name) {
        for (auto it = scope.names.rbegin(); it != scope.names.rend(); ++it)
            if (it->first == name) return it->second;
        return std::nullopt;
    }

    std::optional<ScalarType> type_of(const Expr& e, Scope& scope) {
        return std::visit(
            [&](const auto& x) -> std::optional<ScalarType> {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Literal>) {
                    if (x.value.type == ScalarType::F32 && !std::isfinite(x.value.f))
                        fail(ViolationKind::NonFiniteLiteral, "non-finite f32 literal");
                    return x.value.type;
                } else if constexpr (std::is_same_v<T, VarRef>) {
                    if (auto t = lookup(scope, x.name)) return t;
                    fail(ViolationKind::UnknownIdentifier, "unknown identifier '" + x.name + "'");
                    return std::nullopt;
                } else if constexpr (std::is_same_v<T, BufferIndex>) {
                    const BufferParam* b = k_.find_buffer(x.buffer);
                    if (!b) {
                        fail(ViolationKind::UnknownIdentifier, "unknown buffer '" + x.buffer + "'");
                        return std::nullopt;
                    }
                    auto it = type_of(*x.index, scope);
                    if (it && *it != ScalarType::I32)
                        fail(ViolationKind::TypeMismatch, "index into '" + x.buffer + "' is not i32");
                    return b->elem;
                } else if constexpr (std::is_same_v<T, Binary>) {
                    auto lt = type_of(*x.lhs, scope);
                    auto rt = type_of(*x.rhs, scope);
                    if (!lt || !rt) return std::nullopt;
                    if (*lt != *rt) {
                        fail(ViolationKind::TypeMismatch,
                             std::string("operands of '") + to_string(x.op) + "' have mixed types " +
                                 to_string(*lt) + " and " + to_string(*rt));
                        return std::nullopt;
                    }
                    if (is_arith(x.op)) {
                        if (*lt == ScalarType::Bool) {
                            fail(ViolationKind::TypeMismatch, "arithmetic on bool");
                            return std::nullopt;
                        }
                        return *lt;
                    }
                    if (is_compare(x.op)) {
                        if (*lt == ScalarType::Bool && x.op != BinOp::Eq && x.op != BinOp::Ne) {
                            fail(ViolationKind::TypeMismatch, "ordered comparison on bool");
                            return std::nullopt;
                        }
                        return ScalarType::Bool;
                    }
                    if (*lt != ScalarType::Bool) {
                        fail(ViolationKind::TypeMismatch, "logical op on non-bool");
                        return std::nullopt;
                    }
                    return ScalarType::Bool;
                } else if constexpr (std::is_same_v<T, Unary>) {
                    auto t = type_of(*x.operand, scope);
                    if (!t) return std::nullopt;
                    if (x.op == UnOp::Neg) {
                        if (*t == ScalarType::Bool) {
                            fail(ViolationKind::TypeMismatch, "negation of bool");
                            return std::nullopt;
                        }
                        return *t;
                    }
                    if (*t != ScalarType::Bool) {
                        fail(ViolationKind::TypeMismatch, "logical not on non-bool");
                        return std::nullopt;
                    }
                    return ScalarType::Bool;
                } else if constexpr (std::is_same_v<T, Call>) {
                    if ((int)x.args.size() != arity(x.fn))
                        fail(ViolationKind::TypeMismatch,
                             std::string(to_string(x.fn)) + " expects " + std::to_string(arity(x.fn)) + " args");
                    for (const auto& a : x.args) {
                        auto t = type_of(*a, scope);
                        if (t && *t != ScalarType::F32)
                            fail(ViolationKind::TypeMismatch,
                                 std::string(to_string(x.fn)) + " argument is not f32");
                    }
                    return ScalarType::F32;
                } else if constexpr (std::is_same_v<T, GlobalId>) {
                    if (x.dim < 0 || x.dim >= k_.dims)
                        fail(ViolationKind::DimensionMisuse,
                             "global_id(" + std::to_string(x.dim) + ") in a " + std::to_string(k_.dims) + "-D kernel");
                    return ScalarType::I32;
                } else {
                    static_assert(std::is_same_v<T, Cast>);
                    auto t = type_of(*x.operand, scope);
                    if (x.to == ScalarType::Bool) {
                        fail(ViolationKind::TypeMismatch, "cast to bool");
                        return std::nullopt;
                    }
                    if (t && *t == ScalarType::Bool)
                        fail(ViolationKind::TypeMismatch, "cast from bool");
                    if (t && *t == x.to)
                        fail(ViolationKind::TypeMismatch, std::string("cast to same type ") + to_string(x.to));
                    return x.to;
                }
            },
            e.node);
    }

    void expect_type(const Expr& e, Scope& scope, ScalarType want, const std::string& what) {
        auto t = type_of(e, scope);
        if (t && *t != want)
            fail(ViolationKind::TypeMismatch,
                 what + " has type " + to_string(*t) + ", expected " + to_string(want));
    }

    void check_body(const std::vector<StmtPtr>& body, Scope& scope) {
        const size_t mark = scope.names.size();
        for (const auto& sp : body) {
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        expect_type(*s.init, scope, s.type, "initializer of '" + s.name + "'");
                        scope.names.emplace_back(s.name, s.type);
                    } else if constexpr (std::is_same_v<T, AssignVar>) {
                        if (scope.loop_vars.count(s.name)) {
                            fail(ViolationKind::LoopVarWrite, "assignment to loop var '" + s.name + "'");
                            return;
                        }
                        if (k_.find_scalar(s.name)) {
                            fail(ViolationKind::ParamWrite,
                                 "assignment to scalar parameter '" + s.name + "'");
                            return;
                        }
                        auto t = lookup(scope, s.name);
                        if (!t) {
                            if (k_.find_buffer(s.name))
                                fail(ViolationKind::TypeMismatch, "assignment to buffer '" + s.name + "' without index");
                            else
                                fail(ViolationKind::UnknownIdentifier, "assignment to unknown '" + s.name + "'");
                            return;
                        }
                        expect_type(*s.value, scope, *t, "assignment to '" + s.name + "'");
                    } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                        const BufferParam* b = k_.find_buffer(s.buffer);
                        if (!b) {
                            fail(ViolationKind::UnknownIdentifier, "store to unknown buffer '" + s.buffer + "'");
                            return;
                        }
                        if (b->dir == BufferDir::In)
                            fail(ViolationKind::InBufferWrite, "store to IN buffer '" + s.buffer + "'");
                        expect_type(*s.index, scope, ScalarType::I32, "index into '" + s.buffer + "'");
                        expect_type(*s.value, scope, b->elem, "store to '" + s.buffer + "'");
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        expect_type(*s.begin, scope, ScalarType::I32, "loop begin");
                        expect_type(*s.end, scope, ScalarType::I32, "loop end");
                        scope.names.emplace_back(s.var, ScalarType::I32);
                        scope.loop_vars.insert(s.var);
                        check_body(s.body, scope);
                        scope.loop_vars.erase(s.var);
                        scope.names.pop_back();
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        expect_type(*s.cond, scope, ScalarType::Bool, "if condition");
                        check_body(s.then_body, scope);
                        check_body(s.else_body, scope);
                    } else {
                        static_assert(std::is_same_v<T, Block>);
                        check_body(s.body, scope);
                    }
                },
                sp->node);
        }
        scope.names.resize(mark);
    }

    bool writes_buffer(const std::vector<StmtPtr>& body, const std::string& name) {
        for (const auto& sp : body) {
            bool hit = std::visit(
                [&](const auto& s) -> bool {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, AssignBuffer>) {
                        return s.buffer == name;
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        return writes_buffer(s.body, name);
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        return writes_buffer(s.then_body, name) || writes_buffer(s.else_body, name);
                    } else if constexpr (std::is_same_v<T, Block>) {
                        return writes_buffer(s.body, name);
                    } else {
                        return false;
                    }
                },
                sp->node);
            if (hit) return true;
        }
        return false;
    }

    void check_out_writes() {
        for (const auto& b : k_.buffers) {
            if (b.dir == BufferDir::In) continue;
            if (!writes_buffer(k_.body, b.name))
                fail(ViolationKind::UnwrittenOutBuffer,
                     std::string(to_string(b.dir)) + " buffer '" + b.name + "' is never written");
        }
    }

    const KernelDef& k_;
    ValidationReport report_;
};

}  // namespace

ValidationReport validate(const KernelDef& kernel) { return Validator(kernel).run(); }

std::optional<std::int32_t> eval_static_i32(const Expr& e, const ScalarBindings& params) {
    return std::visit(
        [&](const auto& x) -> std::optional<std::int32_t> {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Literal>) {
                if (x.value.type == ScalarType::I32) return x.value.i;
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, VarRef>) {
                auto it = params.find(x.name);
                if (it != params.end() && it->second.type == ScalarType::I32) return it->second.i;
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Binary>) {
                auto l = eval_static_i32(*x.lhs, params);
                auto r = eval_static_i32(*x.rhs, params);
                if (!l || !r) return std::nullopt;
                // Wrapping arithmetic, matching the interpreter.
                auto ul = static_cast<std::uint32_t>(*l);
                auto ur = static_cast<std::uint32_t>(*r);
                switch (x.op) {
                    case BinOp::Add: return static_cast<std::int32_t>(ul + ur);
                    case BinOp::Sub: return static_cast<std::int32_t>(ul - ur);
                    case BinOp::Mul: return static_cast<std::int32_t>(ul * ur);
                    case BinOp::Div:
                        if (*r == 0) return std::nullopt;
                        return *l / *r;
                    default: return std::nullopt;
                }
            } else if constexpr (std::is_same_v<T, Unary>) {
                if (x.op != UnOp::Neg) return std::nullopt;
                auto v = eval_static_i32(*x.operand, params);
                if (!v) return std::nullopt;
                return static_cast<std::int32_t>(-static_cast<std::uint32_t>(*v));
            } else {
                return std::nullopt;
            }
        },
        e.node);
}

namespace {

// Type probe used by the flop counter. Validation has already accepted the
// kernel, so operand types can be read off the expression's left spine;
// every spine ends in a node whose type is immediate.
class TypeProbe {
public:
    TypeProbe(const KernelDef& k, const ScalarBindings& params) : k_(k), params_(params) {}

    ScalarType type_of(const Expr& e) const {
        const Expr* cur = &e;
        for (;;) {
            if (const auto* b = std::get_if<Binary>(&cur->node)) {
                if (is_compare(b->op) || is_logic(b->op)) return ScalarType::Bool;
                cur = b->lhs.get();
            } else if (const auto* u = std::get_if<Unary>(&cur->node)) {
                if (u->op == UnOp::Not) return ScalarType::Bool;
                cur = u->operand.get();
            } else {
                break;
            }
        }
        if (const auto* l = std::get_if<Literal>(&cur->node)) return l->value.type;
        if (std::get_if<GlobalId>(&cur->node)) return ScalarType::I32;
        if (const auto* c = std::get_if<Cast>(&cur->node)) return c->to;
        if (std::get_if<Call>(&cur->node)) return ScalarType::F32;
        if (const auto* bi = std::get_if<BufferIndex>(&cur->node)) {
            if (const BufferParam* bp = k_.find_buffer(bi->buffer)) return bp->elem;
            return ScalarType::F32;
        }
        if (const auto* v = std::get_if<VarRef>(&cur->node)) {
            if (auto t = k_.find_scalar(v->name)) return *t;
            auto it = locals_.find(v->name);
            if (it != locals_.end()) return it->second;
            return ScalarType::F32;
        }
        return ScalarType::F32;
    }

    void note_local(const std::string& name, ScalarType t) { locals_[name] = t; }

    std::int64_t expr_flops(const Expr& e) const {
        return std::visit(
            [&](const auto& x) -> std::int64_t {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Literal> || std::is_same_v<T, VarRef> ||
                              std::is_same_v<T, GlobalId>) {
                    return 0;
                } else if constexpr (std::is_same_v<T, BufferIndex>) {
                    return expr_flops(*x.index);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    std::int64_t c = expr_flops(*x.lhs) + expr_flops(*x.rhs);
                    if (is_arith(x.op) && type_of(*x.lhs) == ScalarType::F32) c += 1;
                    return c;
                } else if constexpr (std::is_same_v<T, Unary>) {
                    std::int64_t c = expr_flops(*x.operand);
                    if (x.op == UnOp::Neg && type_of(*x.operand) == ScalarType::F32) c += 1;
                    return c;
                } else if constexpr (std::is_same_v<T, Call>) {
                    std::int64_t c = 1;
                    for (const auto& a : x.args) c += expr_flops(*a);
                    return c;
                } else {
                    static_assert(std::is_same_v<T, Cast>);
                    return expr_flops(*x.operand);
                }
            },
            e.node);
    }

private:
    const KernelDef& k_;
    const ScalarBindings& params_;
    std::map<std::string, ScalarType, std::less<>> locals_;
};

class FlopCounter {
public:
    FlopCounter(const KernelDef& k, const ScalarBindings& params)
        : k_(k), probe_(k, params), env_(params) {}

    std::int64_t per_item() { return count_body(k_.body); }

private:
    std::int64_t count_body(const std::vector<StmtPtr>& body) {
        std::int64_t total = 0;
        for (const auto& sp : body) {
            total += std::visit(
                [&](const auto& s) -> std::int64_t {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        probe_.note_local(s.name, s.type);
                        // Statically known I32 locals keep nested loop
                        // bounds resolvable (unrolled kernels produce them).
                        if (s.type == ScalarType::I32)
                            if (auto v = eval_static_i32(*s.init, env_)) env_[s.name] = Value::i32(*v);
                        return probe_.expr_flops(*s.init);
                    } else if constexpr (std::is_same_v<T, AssignVar>) {
                        env_.erase(s.name);
                        return probe_.expr_flops(*s.value);
                    } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                        return probe_.expr_flops(*s.index) + probe_.expr_flops(*s.value);
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        auto b = eval_static_i32(*s.begin, env_);
                        auto e = eval_static_i32(*s.end, env_);
                        if (!b || !e)
                            throw AnalysisError("flops_measure: loop bound of '" + s.var +
                                                "' in kernel '" + k_.name + "' is not resolvable");
                        std::int64_t trip = std::max<std::int64_t>(0, *e - *b);
                        probe_.note_local(s.var, ScalarType::I32);
                        return probe_.expr_flops(*s.begin) + probe_.expr_flops(*s.end) +
                               trip * count_body(s.body);
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        return probe_.expr_flops(*s.cond) +
                               std::max(count_body(s.then_body), count_body(s.else_body));
                    } else {
                        static_assert(std::is_same_v<T, Block>);
                        return count_body(s.body);
                    }
                },
                sp->node);
        }
        return total;
    }

    const KernelDef& k_;
    TypeProbe probe_;
    ScalarBindings env_;
};

}  // namespace

std::int64_t flops_measure(const KernelDef& kernel, const LaunchRange& range,
                           const ScalarBindings& params) {
    FlopCounter fc(kernel, params);
    return fc.per_item() * range.items();
}

TransferBytes bytes_transferred(const KernelDef& kernel) {
    TransferBytes t;
    for (const auto& b : kernel.buffers) {
        std::int64_t bytes = b.length * 4;
        if (b.dir == BufferDir::In || b.dir == BufferDir::InOut) t.host_to_device += bytes;
        if (b.dir == BufferDir::Out || b.dir == BufferDir::InOut) t.device_to_host += bytes;
    }
    return t;
}

namespace {

void scan_loops(const std::vector<StmtPtr>& body, int depth, const ScalarBindings& env,
                int& max_depth, std::int64_t& min_trip) {
    for (const auto& sp : body) {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, ForLoop>) {
                    std::int64_t trip = 1;
                    auto b = eval_static_i32(*s.begin, env);
                    auto e = eval_static_i32(*s.end, env);
                    if (b && e) trip = std::max<std::int64_t>(0, *e - *b);
                    if (depth + 1 > max_depth) {
                        max_depth = depth + 1;
                        min_trip = trip;
                    } else if (depth + 1 == max_depth) {
                        min_trip = std::min(min_trip, trip);
                    }
                    scan_loops(s.body, depth + 1, env, max_depth, min_trip);
                } else if constexpr (std::is_same_v<T, IfElse>) {
                    scan_loops(s.then_body, depth, env, max_depth, min_trip);
                    scan_loops(s.else_body, depth, env, max_depth, min_trip);
                } else if constexpr (std::is_same_v<T, Block>) {
                    scan_loops(s.body, depth, env, max_depth, min_trip);
                }
            },
            sp->node);
    }
}

}  // namespace

std::int64_t innermost_trip_count(const KernelDef& kernel, const ScalarBindings& params) {
    int max_depth = 0;
    std::int64_t min_trip = 1;
    scan_loops(kernel.body, 0, params, max_depth, min_trip);
    return max_depth == 0 ? 1 : std::max<std::int64_t>(1, min_trip);
}

}  // namespace hetero
