#include "hetero/codegen.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "hetero/analysis.hpp"

namespace hetero {

std::string CodegenOptions::variant_name() const {
    if (auto_opt) return "O3";
    return std::to_string(compute_units) + "PU-" + std::to_string(unroll_factor) + "UL";
}

std::optional<CodegenOptions> CodegenOptions::parse_variant(std::string_view s) {
    if (s == "O3") return o3();
    // <int>PU-<int>UL
    size_t pu_pos = s.find("PU-");
    if (pu_pos == std::string_view::npos || pu_pos == 0) return std::nullopt;
    size_t ul_pos = s.find("UL", pu_pos + 3);
    if (ul_pos == std::string_view::npos || ul_pos + 2 != s.size()) return std::nullopt;
    int pu = 0, ul = 0;
    auto r1 = std::from_chars(s.data(), s.data() + pu_pos, pu);
    auto r2 = std::from_chars(s.data() + pu_pos + 3, s.data() + ul_pos, ul);
    if (r1.ec != std::errc{} || r1.ptr != s.data() + pu_pos) return std::nullopt;
    if (r2.ec != std::errc{} || r2.ptr != s.data() + ul_pos) return std::nullopt;
    if (pu < 1 || ul < 1) return std::nullopt;
    return pu_ul(pu, ul);
}

// ---------------------------------------------------------------------------
// Loop unrolling
// ---------------------------------------------------------------------------

namespace {

using Subst = std::map<std::string, ExprPtr, std::less<>>;

bool is_static_i32_expr(const Expr& e, const KernelDef& k) {
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Literal>) {
                return x.value.type == ScalarType::I32;
            } else if constexpr (std::is_same_v<T, VarRef>) {
                auto t = k.find_scalar(x.name);
                return t && *t == ScalarType::I32;
            } else if constexpr (std::is_same_v<T, Binary>) {
                return is_arith(x.op) && is_static_i32_expr(*x.lhs, k) &&
                       is_static_i32_expr(*x.rhs, k);
            } else if constexpr (std::is_same_v<T, Unary>) {
                return x.op == UnOp::Neg && is_static_i32_expr(*x.operand, k);
            } else {
                return false;
            }
        },
        e.node);
}

std::optional<std::int32_t> as_i32_literal(const Expr& e) {
    if (const auto* l = std::get_if<Literal>(&e.node))
        if (l->value.type == ScalarType::I32) return l->value.i;
    return std::nullopt;
}

// Constant folding plus the obvious additive/multiplicative identities,
// applied to the integer index expressions the unroller synthesizes.
ExprPtr simplify_i32(const ExprPtr& e) {
    const auto* b = std::get_if<Binary>(&e->node);
    if (!b || !is_arith(b->op)) return e;
    ExprPtr lhs = simplify_i32(b->lhs);
    ExprPtr rhs = simplify_i32(b->rhs);
    auto lv = as_i32_literal(*lhs);
    auto rv = as_i32_literal(*rhs);
    if (lv && rv) {
        ScalarBindings none;
        Expr folded{Binary{b->op, lhs, rhs}};
        if (auto v = eval_static_i32(folded, none)) return ir::lit_i32(*v);
    }
    switch (b->op) {
        case BinOp::Add:
            if (lv && *lv == 0) return rhs;
            if (rv && *rv == 0) return lhs;
            break;
        case BinOp::Sub:
            if (rv && *rv == 0) return lhs;
            break;
        case BinOp::Mul:
            if (lv && *lv == 1) return rhs;
            if (rv && *rv == 1) return lhs;
            if ((lv && *lv == 0) || (rv && *rv == 0)) return ir::lit_i32(0);
            break;
        default:
            break;
    }
    if (lhs == b->lhs && rhs == b->rhs) return e;
    return ir::bin(b->op, std::move(lhs), std::move(rhs));
}

class Unroller {
public:
    Unroller(const KernelDef& k, int factor) : k_(k), factor_(factor) {
        collect_names(k.body);
        for (const auto& b : k.buffers) used_.insert(b.name);
        for (const auto& [n, t] : k.scalars) {
            (void)t;
            used_.insert(n);
        }
    }

    std::vector<StmtPtr> run() { return transform_body(k_.body); }

private:
    void collect_names(const std::vector<StmtPtr>& body) {
        for (const auto& sp : body) {
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        used_.insert(s.name);
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        used_.insert(s.var);
                        collect_names(s.body);
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        collect_names(s.then_body);
                        collect_names(s.else_body);
                    } else if constexpr (std::is_same_v<T, Block>) {
                        collect_names(s.body);
                    }
                },
                sp->node);
        }
    }

    std::string fresh(const std::string& base) {
        std::string name = base;
        int n = 2;
        while (!used_.insert(name).second) name = base + std::to_string(n++);
        return name;
    }

    ExprPtr subst_expr(const ExprPtr& e, const Subst& map) {
        return std::visit(
            [&](const auto& x) -> ExprPtr {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Literal> || std::is_same_v<T, GlobalId>) {
                    return e;
                } else if constexpr (std::is_same_v<T, VarRef>) {
                    auto it = map.find(x.name);
                    return it == map.end() ? e : it->second;
                } else if constexpr (std::is_same_v<T, BufferIndex>) {
                    return ir::index(x.buffer, subst_expr(x.index, map));
                } else if constexpr (std::is_same_v<T, Binary>) {
                    return ir::bin(x.op, subst_expr(x.lhs, map), subst_expr(x.rhs, map));
                } else if constexpr (std::is_same_v<T, Unary>) {
                    return x.op == UnOp::Neg ? ir::neg(subst_expr(x.operand, map))
                                             : ir::logic_not(subst_expr(x.operand, map));
                } else if constexpr (std::is_same_v<T, Call>) {
                    std::vector<ExprPtr> args;
                    for (const auto& a : x.args) args.push_back(subst_expr(a, map));
                    return ir::call(x.fn, std::move(args));
                } else {
                    static_assert(std::is_same_v<T, Cast>);
                    return ir::cast(x.to, subst_expr(x.operand, map));
                }
            },
            e->node);
    }

    // Clones a body with `map` applied; declared names (locals and loop
    // vars) are renamed to keep the kernel-wide namespace collision-free.
    std::vector<StmtPtr> clone_body(const std::vector<StmtPtr>& body, Subst map) {
        std::vector<StmtPtr> out;
        out.reserve(body.size());
        for (const auto& sp : body) {
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        std::string renamed = fresh(s.name);
                        ExprPtr init = subst_expr(s.init, map);
                        map[s.name] = ir::var(renamed);
                        out.push_back(ir::decl(renamed, s.type, std::move(init)));
                    } else if constexpr (std::is_same_v<T, AssignVar>) {
                        std::string target = s.name;
                        auto it = map.find(s.name);
                        if (it != map.end()) {
                            // Renamed local; assignments to substituted loop
                            // vars are impossible (validated IR).
                            target = std::get<VarRef>(it->second->node).name;
                        }
                        out.push_back(ir::assign(std::move(target), subst_expr(s.value, map)));
                    } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                        out.push_back(ir::store(s.buffer, subst_expr(s.index, map),
                                                subst_expr(s.value, map)));
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        std::string renamed = fresh(s.var);
                        ExprPtr begin = subst_expr(s.begin, map);
                        ExprPtr end = subst_expr(s.end, map);
                        map[s.var] = ir::var(renamed);
                        out.push_back(ir::for_loop(renamed, std::move(begin), std::move(end),
                                                   clone_body(s.body, map)));
                        map.erase(s.var);
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        out.push_back(ir::if_else(subst_expr(s.cond, map),
                                                  clone_body(s.then_body, map),
                                                  clone_body(s.else_body, map)));
                    } else {
                        static_assert(std::is_same_v<T, Block>);
                        out.push_back(ir::block(clone_body(s.body, map)));
                    }
                },
                sp->node);
        }
        return out;
    }

    StmtPtr transform_loop(const ForLoop& s) {
        if (!is_static_i32_expr(*s.begin, k_) || !is_static_i32_expr(*s.end, k_))
            throw TransformError("unroll: loop bound of '" + s.var + "' in kernel '" + k_.name +
                                 "' is not an analyzable expression over literals and scalar params");

        std::vector<StmtPtr> body = transform_body(s.body);

        // main steps M = (end - begin) / factor, remainder runs [begin + M*factor, end)
        ExprPtr trip = simplify_i32(ir::sub(s.end, s.begin));
        ExprPtr main_steps = simplify_i32(ir::div(trip, ir::lit_i32(factor_)));
        ExprPtr rem_begin =
            simplify_i32(ir::add(s.begin, ir::mul(main_steps, ir::lit_i32(factor_))));

        auto m_lit = as_i32_literal(*main_steps);

        std::vector<StmtPtr> result;
        if (!m_lit || *m_lit > 0) {
            std::string step = fresh(s.var + "_s");
            std::vector<StmtPtr> main_body;
            for (int c = 0; c < factor_; ++c) {
                ExprPtr iter = simplify_i32(ir::add(
                    ir::add(s.begin, ir::mul(ir::var(step), ir::lit_i32(factor_))),
                    ir::lit_i32(c)));
                Subst map;
                map[s.var] = std::move(iter);
                auto copy = clone_body(body, std::move(map));
                for (auto& st : copy) main_body.push_back(std::move(st));
            }
            result.push_back(
                ir::for_loop(std::move(step), ir::lit_i32(0), main_steps, std::move(main_body)));
        }

        bool drop_remainder = false;
        if (m_lit) {
            auto b_lit = as_i32_literal(*rem_begin);
            auto e_lit = as_i32_literal(*s.end);
            if (b_lit && e_lit && *b_lit >= *e_lit) drop_remainder = true;
        }
        if (!drop_remainder)
            result.push_back(ir::for_loop(s.var, rem_begin, s.end, std::move(body)));

        if (result.size() == 1) return std::move(result[0]);
        return ir::block(std::move(result));
    }

    std::vector<StmtPtr> transform_body(const std::vector<StmtPtr>& body) {
        std::vector<StmtPtr> out;
        out.reserve(body.size());
        for (const auto& sp : body) {
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, ForLoop>) {
                        out.push_back(transform_loop(s));
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        out.push_back(ir::if_else(s.cond, transform_body(s.then_body),
                                                  transform_body(s.else_body)));
                    } else if constexpr (std::is_same_v<T, Block>) {
                        out.push_back(ir::block(transform_body(s.body)));
                    } else {
                        out.push_back(sp);
                    }
                },
                sp->node);
        }
        return out;
    }

    const KernelDef& k_;
    int factor_;
    std::set<std::string, std::less<>> used_;
};

}  // namespace

KernelDef unroll(const KernelDef& kernel, int factor) {
    if (factor < 1) throw TransformError("unroll: factor must be >= 1");
    if (factor == 1) return kernel;
    KernelDef out = kernel;
    out.body = Unroller(kernel, factor).run();
    return out;
}

// ---------------------------------------------------------------------------
// OpenCL-C emission
// ---------------------------------------------------------------------------

namespace {

const char* cl_type(ScalarType t) {
    switch (t) {
        case ScalarType::F32: return "float";
        case ScalarType::I32: return "int";
        case ScalarType::Bool: return "bool";
    }
    return "?";
}

std::string f32_literal(float v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    std::string s(buf);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s + "f";
}

int precedence(BinOp op) {
    switch (op) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Eq:
        case BinOp::Ne: return 3;
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge: return 4;
        case BinOp::Add:
        case BinOp::Sub: return 5;
        case BinOp::Mul:
        case BinOp::Div: return 6;
    }
    return 0;
}

const char* op_token(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

const char* intrinsic_token(Intrinsic fn) {
    switch (fn) {
        case Intrinsic::Sqrt: return "sqrt";
        case Intrinsic::Rsqrt: return "rsqrt";
        case Intrinsic::Exp: return "exp";
        case Intrinsic::Log: return "log";
        case Intrinsic::Fabs: return "fabs";
        case Intrinsic::Min: return "fmin";
        case Intrinsic::Max: return "fmax";
        case Intrinsic::Pow: return "pow";
    }
    return "?";
}

class Emitter {
public:
    explicit Emitter(const KernelDef& k) : k_(k) {}

    std::string run(const CodegenOptions& opts) {
        os_ << "// kernel: " << k_.name << "  variant: " << opts.variant_name() << "\n";
        os_ << "// unroll factor: " << opts.unroll_factor << "\n";
        if (opts.auto_opt) os_ << "// auto-optimize\n";
        if (opts.compute_units > 1)
            os_ << "__attribute__((num_compute_units(" << opts.compute_units << ")))\n";
        os_ << "__kernel void " << k_.name << "(";
        bool first = true;
        for (const auto& b : k_.buffers) {
            if (!first) os_ << ", ";
            first = false;
            os_ << "__global ";
            if (b.dir == BufferDir::In) os_ << "const ";
            os_ << cl_type(b.elem) << "* " << b.name;
        }
        for (const auto& [n, t] : k_.scalars) {
            if (!first) os_ << ", ";
            first = false;
            os_ << "const " << cl_type(t) << " " << n;
        }
        os_ << ") {\n";
        emit_body(k_.body, 1);
        os_ << "}\n";
        return os_.str();
    }

private:
    void indent(int level) {
        for (int i = 0; i < level; ++i) os_ << "    ";
    }

    // prec: precedence of the context; wrap when this expression binds
    // looser. 8 = primary.
    void emit_expr(const Expr& e, int parent_prec, bool right_side) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Literal>) {
                    switch (x.value.type) {
                        case ScalarType::F32: os_ << f32_literal(x.value.f); break;
                        case ScalarType::I32: os_ << x.value.i; break;
                        case ScalarType::Bool: os_ << (x.value.b ? "true" : "false"); break;
                    }
                } else if constexpr (std::is_same_v<T, VarRef>) {
                    os_ << x.name;
                } else if constexpr (std::is_same_v<T, BufferIndex>) {
                    os_ << x.buffer << "[";
                    emit_expr(*x.index, 0, false);
                    os_ << "]";
                } else if constexpr (std::is_same_v<T, Binary>) {
                    int prec = precedence(x.op);
                    bool wrap = right_side ? prec <= parent_prec : prec < parent_prec;
                    if (wrap) os_ << "(";
                    emit_expr(*x.lhs, prec, false);
                    os_ << " " << op_token(x.op) << " ";
                    emit_expr(*x.rhs, prec, true);
                    if (wrap) os_ << ")";
                } else if constexpr (std::is_same_v<T, Unary>) {
                    bool wrap = right_side ? 7 <= parent_prec : 7 < parent_prec;
                    if (wrap) os_ << "(";
                    os_ << (x.op == UnOp::Neg ? "-" : "!");
                    // operand must be primary-tight or parenthesized
                    emit_expr(*x.operand, 7, true);
                    if (wrap) os_ << ")";
                } else if constexpr (std::is_same_v<T, Call>) {
                    os_ << intrinsic_token(x.fn) << "(";
                    for (size_t i = 0; i < x.args.size(); ++i) {
                        if (i) os_ << ", ";
                        emit_expr(*x.args[i], 0, false);
                    }
                    os_ << ")";
                } else if constexpr (std::is_same_v<T, GlobalId>) {
                    os_ << "get_global_id(" << x.dim << ")";
                } else {
                    static_assert(std::is_same_v<T, Cast>);
                    os_ << "(" << cl_type(x.to) << ")(";
                    emit_expr(*x.operand, 0, false);
                    os_ << ")";
                }
            },
            e.node);
    }

    void emit_body(const std::vector<StmtPtr>& body, int level) {
        for (const auto& sp : body) {
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, DeclLocal>) {
                        indent(level);
                        os_ << cl_type(s.type) << " " << s.name << " = ";
                        emit_expr(*s.init, 0, false);
                        os_ << ";\n";
                    } else if constexpr (std::is_same_v<T, AssignVar>) {
                        indent(level);
                        os_ << s.name << " = ";
                        emit_expr(*s.value, 0, false);
                        os_ << ";\n";
                    } else if constexpr (std::is_same_v<T, AssignBuffer>) {
                        indent(level);
                        os_ << s.buffer << "[";
                        emit_expr(*s.index, 0, false);
                        os_ << "] = ";
                        emit_expr(*s.value, 0, false);
                        os_ << ";\n";
                    } else if constexpr (std::is_same_v<T, ForLoop>) {
                        indent(level);
                        os_ << "for (int " << s.var << " = ";
                        emit_expr(*s.begin, 0, false);
                        os_ << "; " << s.var << " < ";
                        emit_expr(*s.end, 0, false);
                        os_ << "; " << s.var << "++) {\n";
                        emit_body(s.body, level + 1);
                        indent(level);
                        os_ << "}\n";
                    } else if constexpr (std::is_same_v<T, IfElse>) {
                        indent(level);
                        os_ << "if (";
                        emit_expr(*s.cond, 0, false);
                        os_ << ") {\n";
                        emit_body(s.then_body, level + 1);
                        indent(level);
                        os_ << "}";
                        if (!s.else_body.empty()) {
                            os_ << " else {\n";
                            emit_body(s.else_body, level + 1);
                            indent(level);
                            os_ << "}";
                        }
                        os_ << "\n";
                    } else {
                        static_assert(std::is_same_v<T, Block>);
                        emit_body(s.body, level);
                    }
                },
                sp->node);
        }
    }

    const KernelDef& k_;
    std::ostringstream os_;
};

}  // namespace

std::string emit_opencl(const KernelDef& kernel, const CodegenOptions& opts) {
    if (!opts.valid())
        throw CodegenError("codegen: invalid options (UL/PU must be >= 1; O3 fixes UL=PU=1)");
    ValidationReport report = validate(kernel);
    if (!report.ok())
        throw CodegenError("codegen: kernel '" + kernel.name + "' does not validate: " +
                           report.summary());
    if (opts.unroll_factor > 1) {
        KernelDef transformed = unroll(kernel, opts.unroll_factor);
        return Emitter(transformed).run(opts);
    }
    return Emitter(kernel).run(opts);
}

}  // namespace hetero
