#include "hetero/ir_json.hpp"

#include <fstream>

#include <json.hpp>

namespace hetero {

namespace {

using nlohmann::json;

json value_to_json(const Value& v) {
    switch (v.type) {
        case ScalarType::F32: return static_cast<double>(v.f);  // exact for any f32
        case ScalarType::I32: return v.i;
        case ScalarType::Bool: return v.b;
    }
    return nullptr;
}

ScalarType type_from_string(const std::string& s) {
    if (s == "f32") return ScalarType::F32;
    if (s == "i32") return ScalarType::I32;
    if (s == "bool") return ScalarType::Bool;
    throw JsonError("unknown scalar type '" + s + "'");
}

BufferDir dir_from_string(const std::string& s) {
    if (s == "in") return BufferDir::In;
    if (s == "out") return BufferDir::Out;
    if (s == "inout") return BufferDir::InOut;
    throw JsonError("unknown buffer direction '" + s + "'");
}

BinOp binop_from_string(const std::string& s) {
    static const std::pair<const char*, BinOp> table[] = {
        {"add", BinOp::Add}, {"sub", BinOp::Sub}, {"mul", BinOp::Mul}, {"div", BinOp::Div},
        {"lt", BinOp::Lt},   {"le", BinOp::Le},   {"gt", BinOp::Gt},   {"ge", BinOp::Ge},
        {"eq", BinOp::Eq},   {"ne", BinOp::Ne},   {"and", BinOp::And}, {"or", BinOp::Or},
    };
    for (const auto& [name, op] : table)
        if (s == name) return op;
    throw JsonError("unknown binary op '" + s + "'");
}

Intrinsic intrinsic_from_string(const std::string& s) {
    static const std::pair<const char*, Intrinsic> table[] = {
        {"sqrt", Intrinsic::Sqrt}, {"rsqrt", Intrinsic::Rsqrt}, {"exp", Intrinsic::Exp},
        {"log", Intrinsic::Log},   {"fabs", Intrinsic::Fabs},   {"min", Intrinsic::Min},
        {"max", Intrinsic::Max},   {"pow", Intrinsic::Pow},
    };
    for (const auto& [name, fn] : table)
        if (s == name) return fn;
    throw JsonError("unknown intrinsic '" + s + "'");
}

json expr_to_json(const Expr& e) {
    return std::visit(
        [&](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Literal>) {
                return {{"expr", "lit"},
                        {"type", to_string(x.value.type)},
                        {"value", value_to_json(x.value)}};
            } else if constexpr (std::is_same_v<T, VarRef>) {
                return {{"expr", "var"}, {"name", x.name}};
            } else if constexpr (std::is_same_v<T, BufferIndex>) {
                return {{"expr", "index"}, {"buffer", x.buffer}, {"index", expr_to_json(*x.index)}};
            } else if constexpr (std::is_same_v<T, Binary>) {
                return {{"expr", "bin"},
                        {"op", to_string(x.op)},
                        {"lhs", expr_to_json(*x.lhs)},
                        {"rhs", expr_to_json(*x.rhs)}};
            } else if constexpr (std::is_same_v<T, Unary>) {
                return {{"expr", "un"},
                        {"op", x.op == UnOp::Neg ? "neg" : "not"},
                        {"x", expr_to_json(*x.operand)}};
            } else if constexpr (std::is_same_v<T, Call>) {
                json args = json::array();
                for (const auto& a : x.args) args.push_back(expr_to_json(*a));
                return {{"expr", "call"}, {"fn", to_string(x.fn)}, {"args", std::move(args)}};
            } else if constexpr (std::is_same_v<T, GlobalId>) {
                return {{"expr", "gid"}, {"dim", x.dim}};
            } else {
                static_assert(std::is_same_v<T, Cast>);
                return {{"expr", "cast"}, {"to", to_string(x.to)}, {"x", expr_to_json(*x.operand)}};
            }
        },
        e.node);
}

json body_to_json(const std::vector<StmtPtr>& body);

json stmt_to_json(const Stmt& s) {
    return std::visit(
        [&](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, DeclLocal>) {
                return {{"stmt", "decl"},
                        {"name", x.name},
                        {"type", to_string(x.type)},
                        {"init", expr_to_json(*x.init)}};
            } else if constexpr (std::is_same_v<T, AssignVar>) {
                return {{"stmt", "assign"}, {"name", x.name}, {"value", expr_to_json(*x.value)}};
            } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                return {{"stmt", "store"},
                        {"buffer", x.buffer},
                        {"index", expr_to_json(*x.index)},
                        {"value", expr_to_json(*x.value)}};
            } else if constexpr (std::is_same_v<T, ForLoop>) {
                return {{"stmt", "for"},
                        {"var", x.var},
                        {"begin", expr_to_json(*x.begin)},
                        {"end", expr_to_json(*x.end)},
                        {"body", body_to_json(x.body)}};
            } else if constexpr (std::is_same_v<T, IfElse>) {
                json j = {{"stmt", "if"},
                          {"cond", expr_to_json(*x.cond)},
                          {"then", body_to_json(x.then_body)}};
                if (!x.else_body.empty()) j["else"] = body_to_json(x.else_body);
                return j;
            } else {
                static_assert(std::is_same_v<T, Block>);
                return {{"stmt", "block"}, {"body", body_to_json(x.body)}};
            }
        },
        s.node);
}

json body_to_json(const std::vector<StmtPtr>& body) {
    json arr = json::array();
    for (const auto& s : body) arr.push_back(stmt_to_json(*s));
    return arr;
}

ExprPtr expr_from_json(const json& j) {
    if (!j.is_object() || !j.contains("expr")) throw JsonError("expression node must carry 'expr'");
    const std::string kind = j.at("expr").get<std::string>();
    if (kind == "lit") {
        ScalarType t = type_from_string(j.at("type").get<std::string>());
        const json& v = j.at("value");
        switch (t) {
            case ScalarType::F32: return ir::lit_f32(static_cast<float>(v.get<double>()));
            case ScalarType::I32: return ir::lit_i32(v.get<std::int32_t>());
            case ScalarType::Bool: return ir::lit_bool(v.get<bool>());
        }
    }
    if (kind == "var") return ir::var(j.at("name").get<std::string>());
    if (kind == "index")
        return ir::index(j.at("buffer").get<std::string>(), expr_from_json(j.at("index")));
    if (kind == "bin")
        return ir::bin(binop_from_string(j.at("op").get<std::string>()),
                       expr_from_json(j.at("lhs")), expr_from_json(j.at("rhs")));
    if (kind == "un") {
        const std::string op = j.at("op").get<std::string>();
        if (op == "neg") return ir::neg(expr_from_json(j.at("x")));
        if (op == "not") return ir::logic_not(expr_from_json(j.at("x")));
        throw JsonError("unknown unary op '" + op + "'");
    }
    if (kind == "call") {
        std::vector<ExprPtr> args;
        for (const auto& a : j.at("args")) args.push_back(expr_from_json(a));
        return ir::call(intrinsic_from_string(j.at("fn").get<std::string>()), std::move(args));
    }
    if (kind == "gid") return ir::global_id(j.at("dim").get<int>());
    if (kind == "cast")
        return ir::cast(type_from_string(j.at("to").get<std::string>()), expr_from_json(j.at("x")));
    throw JsonError("unknown expression kind '" + kind + "'");
}

std::vector<StmtPtr> body_from_json(const json& j);

StmtPtr stmt_from_json(const json& j) {
    if (!j.is_object() || !j.contains("stmt")) throw JsonError("statement node must carry 'stmt'");
    const std::string kind = j.at("stmt").get<std::string>();
    if (kind == "decl")
        return ir::decl(j.at("name").get<std::string>(),
                        type_from_string(j.at("type").get<std::string>()),
                        expr_from_json(j.at("init")));
    if (kind == "assign")
        return ir::assign(j.at("name").get<std::string>(), expr_from_json(j.at("value")));
    if (kind == "store")
        return ir::store(j.at("buffer").get<std::string>(), expr_from_json(j.at("index")),
                         expr_from_json(j.at("value")));
    if (kind == "for")
        return ir::for_loop(j.at("var").get<std::string>(), expr_from_json(j.at("begin")),
                            expr_from_json(j.at("end")), body_from_json(j.at("body")));
    if (kind == "if") {
        std::vector<StmtPtr> else_body;
        if (j.contains("else")) else_body = body_from_json(j.at("else"));
        return ir::if_else(expr_from_json(j.at("cond")), body_from_json(j.at("then")),
                           std::move(else_body));
    }
    if (kind == "block") return ir::block(body_from_json(j.at("body")));
    throw JsonError("unknown statement kind '" + kind + "'");
}

std::vector<StmtPtr> body_from_json(const json& j) {
    if (!j.is_array()) throw JsonError("body must be an array of statements");
    std::vector<StmtPtr> body;
    for (const auto& s : j) body.push_back(stmt_from_json(s));
    return body;
}

}  // namespace

std::string kernel_to_json(const KernelDef& kernel) {
    json buffers = json::array();
    for (const auto& b : kernel.buffers)
        buffers.push_back({{"name", b.name},
                           {"elem", to_string(b.elem)},
                           {"len", b.length},
                           {"dir", to_string(b.dir)}});
    json scalars = json::array();
    for (const auto& [n, t] : kernel.scalars)
        scalars.push_back({{"name", n}, {"type", to_string(t)}});
    json j = {{"name", kernel.name},
              {"dims", kernel.dims},
              {"buffers", std::move(buffers)},
              {"scalars", std::move(scalars)},
              {"body", body_to_json(kernel.body)}};
    return j.dump(2) + "\n";
}

KernelDef kernel_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw JsonError(std::string("kernel JSON parse error: ") + e.what());
    }
    try {
        KernelDef k;
        k.name = j.at("name").get<std::string>();
        k.dims = j.at("dims").get<int>();
        for (const auto& b : j.at("buffers")) {
            BufferParam p;
            p.name = b.at("name").get<std::string>();
            p.elem = type_from_string(b.at("elem").get<std::string>());
            p.length = b.at("len").get<std::int64_t>();
            p.dir = dir_from_string(b.at("dir").get<std::string>());
            k.buffers.push_back(std::move(p));
        }
        for (const auto& s : j.at("scalars"))
            k.scalars.emplace_back(s.at("name").get<std::string>(),
                                   type_from_string(s.at("type").get<std::string>()));
        k.body = body_from_json(j.at("body"));
        return k;
    } catch (const nlohmann::json::exception& e) {
        throw JsonError(std::string("kernel JSON structure error: ") + e.what());
    }
}

KernelDef load_kernel_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw JsonError("cannot open kernel file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return kernel_from_json(text);
}

void save_kernel_json(const KernelDef& kernel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw JsonError("cannot write kernel file '" + path + "'");
    out << kernel_to_json(kernel);
}

}  // namespace hetero
