#include "hetero/ir.hpp"

#include <cstring>

namespace hetero {

const char* to_string(ScalarType t) {
    switch (t) {
        case ScalarType::F32: return "f32";
        case ScalarType::I32: return "i32";
        case ScalarType::Bool: return "bool";
    }
    return "?";
}

const char* to_string(BufferDir d) {
    switch (d) {
        case BufferDir::In: return "in";
        case BufferDir::Out: return "out";
        case BufferDir::InOut: return "inout";
    }
    return "?";
}

const char* to_string(BinOp op) {
    switch (op) {
        case BinOp::Add: return "add";
        case BinOp::Sub: return "sub";
        case BinOp::Mul: return "mul";
        case BinOp::Div: return "div";
        case BinOp::Lt: return "lt";
        case BinOp::Le: return "le";
        case BinOp::Gt: return "gt";
        case BinOp::Ge: return "ge";
        case BinOp::Eq: return "eq";
        case BinOp::Ne: return "ne";
        case BinOp::And: return "and";
        case BinOp::Or: return "or";
    }
    return "?";
}

const char* to_string(Intrinsic fn) {
    switch (fn) {
        case Intrinsic::Sqrt: return "sqrt";
        case Intrinsic::Rsqrt: return "rsqrt";
        case Intrinsic::Exp: return "exp";
        case Intrinsic::Log: return "log";
        case Intrinsic::Fabs: return "fabs";
        case Intrinsic::Min: return "min";
        case Intrinsic::Max: return "max";
        case Intrinsic::Pow: return "pow";
    }
    return "?";
}

bool is_arith(BinOp op) {
    return op == BinOp::Add || op == BinOp::Sub || op == BinOp::Mul || op == BinOp::Div;
}

bool is_compare(BinOp op) {
    switch (op) {
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge:
        case BinOp::Eq:
        case BinOp::Ne:
            return true;
        default:
            return false;
    }
}

bool is_logic(BinOp op) { return op == BinOp::And || op == BinOp::Or; }

int arity(Intrinsic fn) {
    switch (fn) {
        case Intrinsic::Min:
        case Intrinsic::Max:
        case Intrinsic::Pow:
            return 2;
        default:
            return 1;
    }
}

bool Value::bits_equal(const Value& o) const {
    if (type != o.type) return false;
    switch (type) {
        case ScalarType::F32: {
            std::uint32_t a, b;
            std::memcpy(&a, &f, 4);
            std::memcpy(&b, &o.f, 4);
            return a == b;
        }
        case ScalarType::I32: return i == o.i;
        case ScalarType::Bool: return b == o.b;
    }
    return false;
}

const BufferParam* KernelDef::find_buffer(std::string_view n) const {
    for (const auto& b : buffers)
        if (b.name == n) return &b;
    return nullptr;
}

std::optional<ScalarType> KernelDef::find_scalar(std::string_view n) const {
    for (const auto& [name, type] : scalars)
        if (name == n) return type;
    return std::nullopt;
}

bool LaunchRange::valid(int dims) const {
    if (g0 < 1 || g1 < 1) return false;
    if (dims == 1 && g1 != 1) return false;
    std::int64_t total = g0 * g1;
    return total <= INT32_MAX;
}

namespace {

bool equal_bodies(const std::vector<StmtPtr>& a, const std::vector<StmtPtr>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!equal(*a[i], *b[i])) return false;
    return true;
}

}  // namespace

bool equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Literal>) {
                return x.value.bits_equal(y.value);
            } else if constexpr (std::is_same_v<T, VarRef>) {
                return x.name == y.name;
            } else if constexpr (std::is_same_v<T, BufferIndex>) {
                return x.buffer == y.buffer && equal(*x.index, *y.index);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return x.op == y.op && equal(*x.lhs, *y.lhs) && equal(*x.rhs, *y.rhs);
            } else if constexpr (std::is_same_v<T, Unary>) {
                return x.op == y.op && equal(*x.operand, *y.operand);
            } else if constexpr (std::is_same_v<T, Call>) {
                if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
                for (size_t i = 0; i < x.args.size(); ++i)
                    if (!equal(*x.args[i], *y.args[i])) return false;
                return true;
            } else if constexpr (std::is_same_v<T, GlobalId>) {
                return x.dim == y.dim;
            } else {
                static_assert(std::is_same_v<T, Cast>);
                return x.to == y.to && equal(*x.operand, *y.operand);
            }
        },
        a.node);
}

bool equal(const Stmt& a, const Stmt& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, DeclLocal>) {
                return x.name == y.name && x.type == y.type && equal(*x.init, *y.init);
            } else if constexpr (std::is_same_v<T, AssignVar>) {
                return x.name == y.name && equal(*x.value, *y.value);
            } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                return x.buffer == y.buffer && equal(*x.index, *y.index) && equal(*x.value, *y.value);
            } else if constexpr (std::is_same_v<T, ForLoop>) {
                return x.var == y.var && equal(*x.begin, *y.begin) && equal(*x.end, *y.end) &&
                       equal_bodies(x.body, y.body);
            } else if constexpr (std::is_same_v<T, IfElse>) {
                return equal(*x.cond, *y.cond) && equal_bodies(x.then_body, y.then_body) &&
                       equal_bodies(x.else_body, y.else_body);
            } else {
                static_assert(std::is_same_v<T, Block>);
                return equal_bodies(x.body, y.body);
            }
        },
        a.node);
}

bool equal(const KernelDef& a, const KernelDef& b) {
    if (a.name != b.name || a.dims != b.dims) return false;
    if (a.buffers.size() != b.buffers.size() || a.scalars.size() != b.scalars.size()) return false;
    for (size_t i = 0; i < a.buffers.size(); ++i) {
        const auto& x = a.buffers[i];
        const auto& y = b.buffers[i];
        if (x.name != y.name || x.elem != y.elem || x.length != y.length || x.dir != y.dir)
            return false;
    }
    for (size_t i = 0; i < a.scalars.size(); ++i)
        if (a.scalars[i] != b.scalars[i]) return false;
    return equal_bodies(a.body, b.body);
}

namespace ir {

namespace {
ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
StmtPtr make(Stmt s) { return std::make_shared<const Stmt>(std::move(s)); }
}  // namespace

ExprPtr lit_f32(float v) { return make(Expr{Literal{Value::f32(v)}}); }
ExprPtr lit_i32(std::int32_t v) { return make(Expr{Literal{Value::i32(v)}}); }
ExprPtr lit_bool(bool v) { return make(Expr{Literal{Value::boolean(v)}}); }
ExprPtr var(std::string name) { return make(Expr{VarRef{std::move(name)}}); }
ExprPtr index(std::string buffer, ExprPtr idx) {
    return make(Expr{BufferIndex{std::move(buffer), std::move(idx)}});
}
ExprPtr bin(BinOp op, ExprPtr lhs, ExprPtr rhs) {
    return make(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr add(ExprPtr a, ExprPtr b) { return bin(BinOp::Add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return bin(BinOp::Sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return bin(BinOp::Mul, std::move(a), std::move(b)); }
ExprPtr div(ExprPtr a, ExprPtr b) { return bin(BinOp::Div, std::move(a), std::move(b)); }
ExprPtr lt(ExprPtr a, ExprPtr b) { return bin(BinOp::Lt, std::move(a), std::move(b)); }
ExprPtr le(ExprPtr a, ExprPtr b) { return bin(BinOp::Le, std::move(a), std::move(b)); }
ExprPtr gt(ExprPtr a, ExprPtr b) { return bin(BinOp::Gt, std::move(a), std::move(b)); }
ExprPtr ge(ExprPtr a, ExprPtr b) { return bin(BinOp::Ge, std::move(a), std::move(b)); }
ExprPtr eq(ExprPtr a, ExprPtr b) { return bin(BinOp::Eq, std::move(a), std::move(b)); }
ExprPtr ne(ExprPtr a, ExprPtr b) { return bin(BinOp::Ne, std::move(a), std::move(b)); }
ExprPtr logic_and(ExprPtr a, ExprPtr b) { return bin(BinOp::And, std::move(a), std::move(b)); }
ExprPtr logic_or(ExprPtr a, ExprPtr b) { return bin(BinOp::Or, std::move(a), std::move(b)); }
ExprPtr neg(ExprPtr x) { return make(Expr{Unary{UnOp::Neg, std::move(x)}}); }
ExprPtr logic_not(ExprPtr x) { return make(Expr{Unary{UnOp::Not, std::move(x)}}); }
ExprPtr call(Intrinsic fn, std::vector<ExprPtr> args) {
    return make(Expr{Call{fn, std::move(args)}});
}
ExprPtr sqrt(ExprPtr x) { return call(Intrinsic::Sqrt, {std::move(x)}); }
ExprPtr rsqrt(ExprPtr x) { return call(Intrinsic::Rsqrt, {std::move(x)}); }
ExprPtr exp(ExprPtr x) { return call(Intrinsic::Exp, {std::move(x)}); }
ExprPtr log(ExprPtr x) { return call(Intrinsic::Log, {std::move(x)}); }
ExprPtr fabs(ExprPtr x) { return call(Intrinsic::Fabs, {std::move(x)}); }
ExprPtr fmin(ExprPtr a, ExprPtr b) { return call(Intrinsic::Min, {std::move(a), std::move(b)}); }
ExprPtr fmax(ExprPtr a, ExprPtr b) { return call(Intrinsic::Max, {std::move(a), std::move(b)}); }
ExprPtr pow(ExprPtr a, ExprPtr b) { return call(Intrinsic::Pow, {std::move(a), std::move(b)}); }
ExprPtr global_id(int dim) { return make(Expr{GlobalId{dim}}); }
ExprPtr cast(ScalarType to, ExprPtr x) { return make(Expr{Cast{to, std::move(x)}}); }

StmtPtr decl(std::string name, ScalarType type, ExprPtr init) {
    return make(Stmt{DeclLocal{std::move(name), type, std::move(init)}});
}
StmtPtr assign(std::string name, ExprPtr value) {
    return make(Stmt{AssignVar{std::move(name), std::move(value)}});
}
StmtPtr store(std::string buffer, ExprPtr idx, ExprPtr value) {
    return make(Stmt{AssignBuffer{std::move(buffer), std::move(idx), std::move(value)}});
}
StmtPtr for_loop(std::string var, ExprPtr begin, ExprPtr end, std::vector<StmtPtr> body) {
    return make(Stmt{ForLoop{std::move(var), std::move(begin), std::move(end), std::move(body)}});
}
StmtPtr if_then(ExprPtr cond, std::vector<StmtPtr> then_body) {
    return make(Stmt{IfElse{std::move(cond), std::move(then_body), {}}});
}
StmtPtr if_else(ExprPtr cond, std::vector<StmtPtr> then_body, std::vector<StmtPtr> else_body) {
    return make(Stmt{IfElse{std::move(cond), std::move(then_body), std::move(else_body)}});
}
StmtPtr block(std::vector<StmtPtr> body) { return make(Stmt{Block{std::move(body)}}); }

}  // namespace ir

}  // namespace hetero
