#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Data-parallel kernel IR. A kernel is a function executed once per work
// item over declared buffers and scalar parameters. All nodes are immutable
// after construction and shared by pointer, so kernels can be used from
// multiple threads without synchronization.

namespace hetero {

enum class ScalarType { F32, I32, Bool };

const char* to_string(ScalarType t);

/// Runtime scalar value. F32 is the only floating type in the system.
struct Value {
    ScalarType type;
    union {
        float f;
        std::int32_t i;
        bool b;
    };

    static Value f32(float v) { Value x{ScalarType::F32, {}}; x.f = v; return x; }
    static Value i32(std::int32_t v) { Value x{ScalarType::I32, {}}; x.i = v; return x; }
    static Value boolean(bool v) { Value x{ScalarType::Bool, {}}; x.b = v; return x; }

    bool bits_equal(const Value& o) const;
};

enum class BinOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnOp { Neg, Not };
enum class Intrinsic { Sqrt, Rsqrt, Exp, Log, Fabs, Min, Max, Pow };

const char* to_string(BinOp op);
const char* to_string(Intrinsic fn);
bool is_arith(BinOp op);
bool is_compare(BinOp op);
bool is_logic(BinOp op);
int arity(Intrinsic fn);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Literal { Value value; };
struct VarRef { std::string name; };
struct BufferIndex { std::string buffer; ExprPtr index; };
struct Binary { BinOp op; ExprPtr lhs, rhs; };
struct Unary { UnOp op; ExprPtr operand; };
struct Call { Intrinsic fn; std::vector<ExprPtr> args; };
struct GlobalId { int dim; };  // 0 or 1
struct Cast { ScalarType to; ExprPtr operand; };

struct Expr {
    std::variant<Literal, VarRef, BufferIndex, Binary, Unary, Call, GlobalId, Cast> node;
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct DeclLocal { std::string name; ScalarType type; ExprPtr init; };
struct AssignVar { std::string name; ExprPtr value; };
struct AssignBuffer { std::string buffer; ExprPtr index; ExprPtr value; };
// Counted loop: var runs over [begin, end) with unit stride. `end` is
// evaluated once, before the first iteration. The loop variable is scoped to
// the body and may not be assigned.
struct ForLoop { std::string var; ExprPtr begin, end; std::vector<StmtPtr> body; };
struct IfElse { ExprPtr cond; std::vector<StmtPtr> then_body, else_body; };
struct Block { std::vector<StmtPtr> body; };

struct Stmt {
    std::variant<DeclLocal, AssignVar, AssignBuffer, ForLoop, IfElse, Block> node;
};

enum class BufferDir { In, Out, InOut };

const char* to_string(BufferDir d);

struct BufferParam {
    std::string name;
    ScalarType elem;       // F32 or I32; 4 bytes per element
    std::int64_t length;   // element count, >= 1
    BufferDir dir;
};

struct KernelDef {
    std::string name;
    int dims = 1;  // launch dimensionality, 1 or 2
    std::vector<BufferParam> buffers;
    std::vector<std::pair<std::string, ScalarType>> scalars;
    std::vector<StmtPtr> body;

    const BufferParam* find_buffer(std::string_view n) const;
    std::optional<ScalarType> find_scalar(std::string_view n) const;
};

struct LaunchRange {
    std::int64_t g0 = 1;
    std::int64_t g1 = 1;  // 1 for 1-D kernels

    std::int64_t items() const { return g0 * g1; }
    bool valid(int dims) const;
};

// Structural equality (used by transform and serialization tests).
bool equal(const Expr& a, const Expr& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const KernelDef& a, const KernelDef& b);

struct IrError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Expression/statement builders. Kernels in this codebase are written
// directly against these; the JSON form (ir_json.hpp) is for the CLI.
namespace ir {

ExprPtr lit_f32(float v);
ExprPtr lit_i32(std::int32_t v);
ExprPtr lit_bool(bool v);
ExprPtr var(std::string name);
ExprPtr index(std::string buffer, ExprPtr idx);
ExprPtr bin(BinOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr lt(ExprPtr a, ExprPtr b);
ExprPtr le(ExprPtr a, ExprPtr b);
ExprPtr gt(ExprPtr a, ExprPtr b);
ExprPtr ge(ExprPtr a, ExprPtr b);
ExprPtr eq(ExprPtr a, ExprPtr b);
ExprPtr ne(ExprPtr a, ExprPtr b);
ExprPtr logic_and(ExprPtr a, ExprPtr b);
ExprPtr logic_or(ExprPtr a, ExprPtr b);
ExprPtr neg(ExprPtr x);
ExprPtr logic_not(ExprPtr x);
ExprPtr call(Intrinsic fn, std::vector<ExprPtr> args);
ExprPtr sqrt(ExprPtr x);
ExprPtr rsqrt(ExprPtr x);
ExprPtr exp(ExprPtr x);
ExprPtr log(ExprPtr x);
ExprPtr fabs(ExprPtr x);
ExprPtr fmin(ExprPtr a, ExprPtr b);
ExprPtr fmax(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, ExprPtr b);
ExprPtr global_id(int dim);
ExprPtr cast(ScalarType to, ExprPtr x);

StmtPtr decl(std::string name, ScalarType type, ExprPtr init);
StmtPtr assign(std::string name, ExprPtr value);
StmtPtr store(std::string buffer, ExprPtr idx, ExprPtr value);
StmtPtr for_loop(std::string var, ExprPtr begin, ExprPtr end, std::vector<StmtPtr> body);
StmtPtr if_then(ExprPtr cond, std::vector<StmtPtr> then_body);
StmtPtr if_else(ExprPtr cond, std::vector<StmtPtr> then_body, std::vector<StmtPtr> else_body);
StmtPtr block(std::vector<StmtPtr> body);

}  // namespace ir

}  // namespace hetero
