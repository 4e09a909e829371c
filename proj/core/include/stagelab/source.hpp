#pragma once

#include <memory>
#include <set>
#include <string>
#include <variant>

#include "stagelab/machine.hpp"

namespace stagelab {

struct SourceTerm;
using TermPtr = std::shared_ptr<const SourceTerm>;

enum class BinKind { Add, Sub, Mul };
enum class CmpKind { Lt, Eq };

struct Lit {
  std::int64_t value;
};
struct BoolLit {
  bool value;
};
struct Var {
  std::string name;
};
struct BinOp {
  BinKind op;
  TermPtr lhs, rhs;
};
struct Cmp {
  CmpKind op;
  TermPtr lhs, rhs;
};
struct IfTerm {
  TermPtr cond, then_branch, else_branch;
};
// ~( body ): body is evaluated while compiling and replaced by its value.
struct Escape {
  TermPtr body;
};

struct SourceTerm {
  std::variant<Lit, BoolLit, Var, BinOp, Cmp, IfTerm, Escape> node;
};

TermPtr make_lit(std::int64_t v);
TermPtr make_bool(bool v);
TermPtr make_var(std::string name);
TermPtr make_bin(BinKind op, TermPtr l, TermPtr r);
TermPtr make_cmp(CmpKind op, TermPtr l, TermPtr r);
TermPtr make_if(TermPtr c, TermPtr t, TermPtr e);
TermPtr make_escape(TermPtr body);

bool term_equal(const TermPtr& a, const TermPtr& b);

/// Grammar:
///   expr := if expr then expr else expr | cmp
///   cmp  := add (('<' | '=') add)*
///   add  := mul (('+' | '-') mul)*
///   mul  := atom ('*' atom)*
///   atom := int | true | false | ident | ~( expr ) | ( expr )
/// All binary operators associate to the left. Throws ParseError.
TermPtr parse_source(const std::string& text);

/// Minimal-parenthesis printer; parse_source(format_source(t)) == t.
std::string format_source(const TermPtr& t);

std::set<std::string> free_vars(const TermPtr& t);

/// True when every escape body in the term is closed. Terms failing this
/// are not members of the language.
bool escapes_closed(const TermPtr& t);

/// Decidable language membership: the text parses and every escape body
/// is closed. Total; never throws.
bool member_la(const std::string& text);

struct SourceValue {
  bool is_bool;
  std::int64_t v; // 0/1 when is_bool

  bool operator==(const SourceValue&) const = default;
};
struct EvalDiverged {};
struct EvalFault {
  std::string message;
};
using EscapeResult = std::variant<SourceValue, EvalDiverged, EvalFault>;

/// Compile-time evaluation of a closed escape body. Nested escapes are
/// evaluated innermost first. Fuel-bounded; type confusion faults.
EscapeResult eval_escape(const TermPtr& body, std::int64_t fuel);

/// Rewrites every outermost escape to the literal of its value.
/// Diverged / faulted escapes surface in the result variant.
std::variant<TermPtr, EvalDiverged, EvalFault> resolve_escapes(const TermPtr& t,
                                                               std::int64_t fuel);

/// The plain compiler. Escapes are evaluated first, then code is emitted
/// compositionally. Non-members yield Error, escape fuel exhaustion
/// yields Bottom, escape evaluation faults yield Error.
CompiledProgram compile_a(const TermPtr& p, std::int64_t fuel = kDefaultFuel);

enum class SType { Int, Bool };

struct SafetyJudgment {
  std::optional<SType> type; // engaged iff the term is judged safe
  std::string reason;        // set when not safe

  bool safe() const { return type.has_value(); }
};

/// Decidable safety judgment: a term is safe iff it can be typed, with
/// every free variable assumed int and escape bodies required closed.
SafetyJudgment typecheck(const TermPtr& p);

/// The safety-layered compiler: Unsafe when the term fails the safety
/// judgment, otherwise exactly compile_a's output.
CompiledProgram compile_a_safe(const TermPtr& p, std::int64_t fuel = kDefaultFuel);

} // namespace stagelab
