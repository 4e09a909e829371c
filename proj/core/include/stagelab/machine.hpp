#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stagelab/error.hpp"

namespace stagelab {

inline constexpr std::int64_t kDefaultFuel = 100000;

enum class Op {
  Pushi, // push immediate integer
  Loadv, // push value of a named input variable
  Iadd,
  Isub,
  Imul,
  Ilt, // pushes 1 if left < right, else 0
  Ieq, // pushes 1 if left == right, else 0
  Jmp,  // skip the next `imm` instructions
  Jmpz, // pop; skip the next `imm` instructions when the value is 0
  Trap
};

struct Instruction {
  Op op;
  std::int64_t imm = 0; // PUSHI value or JMP/JMPZ offset
  std::string var;      // LOADV name

  bool operator==(const Instruction&) const = default;
};

inline Instruction pushi(std::int64_t n) { return {Op::Pushi, n, {}}; }
inline Instruction loadv(std::string name) { return {Op::Loadv, 0, std::move(name)}; }
inline Instruction jmp(std::int64_t d) { return {Op::Jmp, d, {}}; }
inline Instruction jmpz(std::int64_t d) { return {Op::Jmpz, d, {}}; }

/// Machine programs compare bit-exact; this is the equality used when
/// partitioning source programs by compiled output.
struct MachineCode {
  std::vector<Instruction> instrs;

  bool operator==(const MachineCode&) const = default;
};

struct Env {
  std::map<std::string, std::int64_t> bindings;

  bool operator==(const Env&) const = default;
};

struct RunResult {
  enum class Kind { Value, Trapped, FuelExhausted };
  Kind kind;
  std::int64_t value = 0;

  bool operator==(const RunResult&) const = default;
};

inline RunResult run_value(std::int64_t v) { return {RunResult::Kind::Value, v}; }
inline RunResult run_trapped() { return {RunResult::Kind::Trapped}; }
inline RunResult run_fuel_exhausted() { return {RunResult::Kind::FuelExhausted}; }

// Compiler outcome domain. Every compiler in this project is total into
// this type: machine code, the designated unsafe outcome, bottom (fuel
// ran out, standing in for a nonterminating compilation), or a plumbing
// error such as a syntax problem.
struct Code {
  MachineCode code;
  bool operator==(const Code&) const = default;
};
struct Unsafe {
  bool operator==(const Unsafe&) const = default;
};
struct Bottom {
  bool operator==(const Bottom&) const = default;
};
struct CompileError {
  std::string message;
  bool operator==(const CompileError&) const = default;
};

struct CompiledProgram {
  std::variant<Code, Unsafe, Bottom, CompileError> v;

  bool operator==(const CompiledProgram&) const = default;

  bool is_code() const { return std::holds_alternative<Code>(v); }
  bool is_unsafe() const { return std::holds_alternative<Unsafe>(v); }
  bool is_bottom() const { return std::holds_alternative<Bottom>(v); }
  bool is_error() const { return std::holds_alternative<CompileError>(v); }

  const MachineCode* code() const {
    auto* c = std::get_if<Code>(&v);
    return c ? &c->code : nullptr;
  }
  const std::string* error_message() const {
    auto* e = std::get_if<CompileError>(&v);
    return e ? &e->message : nullptr;
  }
};

inline CompiledProgram compiled_code(MachineCode m) { return {Code{std::move(m)}}; }
inline CompiledProgram compiled_unsafe() { return {Unsafe{}}; }
inline CompiledProgram compiled_bottom() { return {Bottom{}}; }
inline CompiledProgram compiled_error(std::string msg) {
  return {CompileError{std::move(msg)}};
}

/// One of "code", "unsafe", "bottom", "error".
std::string outcome_kind(const CompiledProgram& p);

/// Human-readable form: the instruction listing for code, or the
/// UNSAFE / BOTTOM / ERROR(...) tokens.
std::string format_compiled(const CompiledProgram& p);

/// Executes `code` as a stack machine. Deterministic; every instruction
/// costs one unit of fuel. Stack underflow, unbound variables and
/// out-of-range jumps trap.
RunResult run_machine(const MachineCode& code, const Env& env, std::int64_t fuel);

/// Suite-restricted observational equivalence. Unsafe, Bottom and Error
/// each form singleton kinds; two code programs are equivalent when
/// run_machine agrees on every environment of the suite.
/// Throws std::invalid_argument on an empty suite for a code/code pair.
bool obs_equiv(const CompiledProgram& a, const CompiledProgram& b,
               const std::vector<Env>& suite, std::int64_t fuel);

/// Text format: one instruction per line, mnemonic then operands;
/// lines starting with '#' and blank lines are ignored.
MachineCode parse_machine(const std::string& text); // throws ParseError
std::string format_machine(const MachineCode& code);

/// Checks that every jump, resolved from its position, lands inside the
/// program or exactly one past its end. Returns a diagnostic on failure.
std::optional<std::string> validate_jumps(const MachineCode& code);

/// Names of all LOADV instructions, sorted and deduplicated.
std::vector<std::string> loadv_names(const MachineCode& code);

/// Deterministic input suite: each variable ranges over
/// {-3, -1, 0, 1, 2, 7, 100}, cross product capped at 64 environments.
/// With no variables the suite is the single empty environment.
std::vector<Env> default_suite(const std::vector<std::string>& names);

/// Default suite over the union of LOADV names of both programs.
std::vector<Env> default_suite_for(const MachineCode& a, const MachineCode& b);

} // namespace stagelab
