#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "stagelab/machine.hpp"
#include "stagelab/source.hpp"

namespace stagelab {

// ---------------------------------------------------------------------------
// Meta-language expressions. A host program is `emit(e)`: the whole of e
// runs while compiling, and the residual program is whatever machine code
// the evaluation produces.

struct MetaExpr;
using MetaPtr = std::shared_ptr<const MetaExpr>;

struct MIntLit {
  std::int64_t value;
};
struct MBoolLit {
  bool value;
};
struct MVarRef {
  std::string name;
};
struct MLambda {
  std::string param;
  MetaPtr body;
};
struct MApply {
  MetaPtr fn, arg;
};
// fix of a curried functional: the operand must evaluate to a closure
// whose body is itself a lambda.
struct MFix {
  MetaPtr fn;
};
struct MPrimRef {
  std::string name;
};
struct MIf {
  MetaPtr cond, then_branch, else_branch;
};
struct MBinPrim {
  char op; // + - * < =
  MetaPtr lhs, rhs;
};
// Codes: quoted source and machine programs.
struct MQuoteA {
  TermPtr term;
};
struct MQuoteM {
  MachineCode code;
};
struct MNil {};
struct MCons {
  MetaPtr head, tail;
};
struct MHead {
  MetaPtr arg;
};
struct MTail {
  MetaPtr arg;
};
// Placeholder for a program's code argument; filled by instantiate().
struct MHole {};

struct MetaExpr {
  std::variant<MIntLit, MBoolLit, MVarRef, MLambda, MApply, MFix, MPrimRef, MIf,
               MBinPrim, MQuoteA, MQuoteM, MNil, MCons, MHead, MTail, MHole>
      node;
};

MetaPtr m_int(std::int64_t v);
MetaPtr m_bool(bool v);
MetaPtr m_var(std::string name);
MetaPtr m_lambda(std::string param, MetaPtr body);
MetaPtr m_apply(MetaPtr fn, MetaPtr arg);
MetaPtr m_fix(MetaPtr fn);
MetaPtr m_prim(std::string name);
MetaPtr m_if(MetaPtr c, MetaPtr t, MetaPtr e);
MetaPtr m_bin(char op, MetaPtr l, MetaPtr r);
MetaPtr m_quote_a(TermPtr term);
MetaPtr m_quote_m(MachineCode code);
MetaPtr m_nil();
MetaPtr m_cons(MetaPtr h, MetaPtr t);
MetaPtr m_head(MetaPtr e);
MetaPtr m_tail(MetaPtr e);
MetaPtr m_hole();

bool meta_equal(const MetaPtr& a, const MetaPtr& b);

// ---------------------------------------------------------------------------
// Meta-values

struct MetaValue;
using ValuePtr = std::shared_ptr<const MetaValue>;

struct MetaEnv;
using MetaEnvPtr = std::shared_ptr<MetaEnv>;

struct VInt {
  std::int64_t value;
};
struct VBool {
  bool value;
};
struct VClosure {
  std::string param;
  MetaPtr body;
  MetaEnvPtr env;
};
struct VPrim {
  std::string name;
};
struct VList {
  std::vector<ValuePtr> items;
};
struct VCodeA {
  TermPtr term;
};
struct VCodeM {
  MachineCode code;
};
// Meta-level code of the designated unsafe outcome.
struct VUnsafe {};

struct MetaValue {
  std::variant<VInt, VBool, VClosure, VPrim, VList, VCodeA, VCodeM, VUnsafe> v;
};

/// Effective coding of source / machine programs as meta-values.
ValuePtr encode_source(const TermPtr& p);
ValuePtr encode_machine(const MachineCode& m);
const TermPtr* decode_source(const ValuePtr& v);
const MachineCode* decode_machine(const ValuePtr& v);

/// Canonical serialized form of a code value, usable as a hash key.
std::string canonical_code(const ValuePtr& v);

/// Quotes a code value back into expression form (MQuoteA / MQuoteM);
/// ints and bools become literals. Throws std::invalid_argument for
/// value kinds with no expression form.
MetaPtr quote_value(const ValuePtr& v);

// ---------------------------------------------------------------------------
// Evaluation

struct MetaFuelExhausted {};
struct MetaError {
  std::string message;
};
using MetaResult = std::variant<ValuePtr, MetaFuelExhausted, MetaError>;

/// Call-by-value evaluation with general recursion through fix.
/// Registered primitives: compile_a, compile_a_safe, typecheck_a,
/// fold_consts. Deterministic; every reduction step costs one unit of
/// fuel.
MetaResult meta_eval(const MetaPtr& e, std::int64_t fuel);

// ---------------------------------------------------------------------------
// Host programs

struct HostProgram {
  MetaPtr emit_arg;
};

/// S-expression surface syntax, e.g.
///   (emit (compile_a (quoteA "x + ~(1+1)")))
///   (emit (quoteM "PUSHI 2\nIADD"))
/// Throws ParseError.
HostProgram parse_host(const std::string& text);
MetaPtr parse_meta(const std::string& text);
std::string format_host(const HostProgram& p);
std::string format_meta(const MetaPtr& e);

/// The compiler for host programs: evaluates the emit argument at
/// compile time. Machine-code values become Code, the unsafe value
/// becomes Unsafe, fuel exhaustion becomes Bottom, evaluation errors and
/// non-code results become Error.
CompiledProgram compile_u(const HostProgram& p, std::int64_t fuel = kDefaultFuel);

/// The machine-language interpreter as a program over codes:
/// interp_program(c) is emit(c), so compiling the interpreter applied to
/// a quoted machine program yields exactly that program.
HostProgram interp_program(MetaPtr code_expr);

/// Number of holes in the program's emit argument.
std::size_t hole_count(const HostProgram& p);

/// Composition of a program with a function over codes: every hole of P
/// becomes F applied to the hole. Throws std::invalid_argument when P
/// has no hole.
HostProgram apply_program(const HostProgram& p, const MetaPtr& f);

/// Fills every hole with the given expression.
HostProgram instantiate(const HostProgram& p, const MetaPtr& arg);

} // namespace stagelab
