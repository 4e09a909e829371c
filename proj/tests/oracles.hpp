// Test-only oracles, written independently of the code paths they check.
#pragma once

#include <optional>
#include <string>
#include <variant>

#include "stagelab/source.hpp"

namespace stagelab::test {

struct OracleValue {
  bool is_bool;
  std::int64_t v;
};
struct OracleError {
  std::string message;
};
using OracleResult = std::variant<OracleValue, OracleError>;

// Direct big-step evaluation of a source term under an environment.
// Escapes evaluate like any other subterm; free variables read the
// environment. This is the reference semantics that staged compilation
// plus machine execution must agree with.
inline OracleResult eval_term(const TermPtr& t, const Env& env) {
  return std::visit(
      [&](const auto& n) -> OracleResult {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) {
          return OracleValue{false, n.value};
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return OracleValue{true, n.value ? 1 : 0};
        } else if constexpr (std::is_same_v<T, Var>) {
          auto it = env.bindings.find(n.name);
          if (it == env.bindings.end()) return OracleError{"unbound " + n.name};
          return OracleValue{false, it->second};
        } else if constexpr (std::is_same_v<T, BinOp>) {
          OracleResult l = eval_term(n.lhs, env);
          if (std::holds_alternative<OracleError>(l)) return l;
          OracleResult r = eval_term(n.rhs, env);
          if (std::holds_alternative<OracleError>(r)) return r;
          auto lv = std::get<OracleValue>(l), rv = std::get<OracleValue>(r);
          if (lv.is_bool || rv.is_bool) return OracleError{"arith on bool"};
          switch (n.op) {
            case BinKind::Add: return OracleValue{false, lv.v + rv.v};
            case BinKind::Sub: return OracleValue{false, lv.v - rv.v};
            default: return OracleValue{false, lv.v * rv.v};
          }
        } else if constexpr (std::is_same_v<T, Cmp>) {
          OracleResult l = eval_term(n.lhs, env);
          if (std::holds_alternative<OracleError>(l)) return l;
          OracleResult r = eval_term(n.rhs, env);
          if (std::holds_alternative<OracleError>(r)) return r;
          auto lv = std::get<OracleValue>(l), rv = std::get<OracleValue>(r);
          if (lv.is_bool || rv.is_bool) return OracleError{"cmp on bool"};
          bool res = n.op == CmpKind::Lt ? lv.v < rv.v : lv.v == rv.v;
          return OracleValue{true, res ? 1 : 0};
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          OracleResult c = eval_term(n.cond, env);
          if (std::holds_alternative<OracleError>(c)) return c;
          auto cv = std::get<OracleValue>(c);
          if (!cv.is_bool) return OracleError{"non-bool condition"};
          return eval_term(cv.v != 0 ? n.then_branch : n.else_branch, env);
        } else { // Escape
          return eval_term(n.body, Env{});
        }
      },
      t->node);
}

// A compiler variant that performs no compile-time evaluation at all:
// escape bodies are compiled as ordinary runtime code. Used to witness
// that the real compiler's partition is strictly finer apart.
inline void emit_no_escape(const TermPtr& t, std::vector<Instruction>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) {
          out.push_back(pushi(n.value));
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          out.push_back(pushi(n.value ? 1 : 0));
        } else if constexpr (std::is_same_v<T, Var>) {
          out.push_back(loadv(n.name));
        } else if constexpr (std::is_same_v<T, BinOp>) {
          emit_no_escape(n.lhs, out);
          emit_no_escape(n.rhs, out);
          out.push_back({n.op == BinKind::Add   ? Op::Iadd
                         : n.op == BinKind::Sub ? Op::Isub
                                                : Op::Imul});
        } else if constexpr (std::is_same_v<T, Cmp>) {
          emit_no_escape(n.lhs, out);
          emit_no_escape(n.rhs, out);
          out.push_back({n.op == CmpKind::Lt ? Op::Ilt : Op::Ieq});
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          emit_no_escape(n.cond, out);
          std::vector<Instruction> then_code, else_code;
          emit_no_escape(n.then_branch, then_code);
          emit_no_escape(n.else_branch, else_code);
          out.push_back(jmpz(static_cast<std::int64_t>(then_code.size()) + 1));
          out.insert(out.end(), then_code.begin(), then_code.end());
          out.push_back(jmp(static_cast<std::int64_t>(else_code.size())));
          out.insert(out.end(), else_code.begin(), else_code.end());
        } else { // Escape: runtime code, no collapse
          emit_no_escape(n.body, out);
        }
      },
      t->node);
}

inline CompiledProgram compile_no_escape(const TermPtr& t) {
  MachineCode code;
  emit_no_escape(t, code.instrs);
  return compiled_code(std::move(code));
}

// Independent constant folder (realizability oracle): same function as
// the host's fold_consts primitive, different author and traversal.
inline TermPtr fold_oracle(const TermPtr& t) {
  auto as_lit = [](const TermPtr& x) -> std::optional<std::int64_t> {
    if (auto* l = std::get_if<Lit>(&x->node)) return l->value;
    return std::nullopt;
  };
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinOp>) {
          TermPtr l = fold_oracle(n.lhs), r = fold_oracle(n.rhs);
          auto a = as_lit(l), b = as_lit(r);
          if (a && b) {
            if (n.op == BinKind::Add) return make_lit(*a + *b);
            if (n.op == BinKind::Sub) return make_lit(*a - *b);
            return make_lit(*a * *b);
          }
          return make_bin(n.op, l, r);
        } else if constexpr (std::is_same_v<T, Cmp>) {
          TermPtr l = fold_oracle(n.lhs), r = fold_oracle(n.rhs);
          auto a = as_lit(l), b = as_lit(r);
          if (a && b)
            return make_bool(n.op == CmpKind::Lt ? *a < *b : *a == *b);
          return make_cmp(n.op, l, r);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          TermPtr c = fold_oracle(n.cond);
          if (auto* b = std::get_if<BoolLit>(&c->node))
            return fold_oracle(b->value ? n.then_branch : n.else_branch);
          return make_if(c, fold_oracle(n.then_branch), fold_oracle(n.else_branch));
        } else if constexpr (std::is_same_v<T, Escape>) {
          return make_escape(fold_oracle(n.body));
        } else {
          return t;
        }
      },
      t->node);
}

} // namespace stagelab::test
