#include "stagelab/machine.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stagelab {

namespace {

bool is_ident(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

} // namespace

std::string outcome_kind(const CompiledProgram& p) {
  switch (p.v.index()) {
    case 0: return "code";
    case 1: return "unsafe";
    case 2: return "bottom";
    default: return "error";
  }
}

std::string format_compiled(const CompiledProgram& p) {
  if (auto* c = p.code()) return format_machine(*c);
  if (p.is_unsafe()) return "UNSAFE";
  if (p.is_bottom()) return "BOTTOM";
  return "ERROR(" + *p.error_message() + ")";
}

RunResult run_machine(const MachineCode& code, const Env& env, std::int64_t fuel) {
  std::vector<std::int64_t> stack;
  const std::size_t n = code.instrs.size();
  std::size_t pc = 0;

  auto pop2 = [&](std::int64_t& l, std::int64_t& r) {
    if (stack.size() < 2) return false;
    r = stack.back();
    stack.pop_back();
    l = stack.back();
    stack.pop_back();
    return true;
  };

  while (pc < n) {
    if (fuel <= 0) return run_fuel_exhausted();
    --fuel;
    const Instruction& ins = code.instrs[pc];
    std::int64_t l, r;
    switch (ins.op) {
      case Op::Pushi:
        stack.push_back(ins.imm);
        ++pc;
        break;
      case Op::Loadv: {
        auto it = env.bindings.find(ins.var);
        if (it == env.bindings.end()) return run_trapped();
        stack.push_back(it->second);
        ++pc;
        break;
      }
      case Op::Iadd:
        if (!pop2(l, r)) return run_trapped();
        stack.push_back(l + r);
        ++pc;
        break;
      case Op::Isub:
        if (!pop2(l, r)) return run_trapped();
        stack.push_back(l - r);
        ++pc;
        break;
      case Op::Imul:
        if (!pop2(l, r)) return run_trapped();
        stack.push_back(l * r);
        ++pc;
        break;
      case Op::Ilt:
        if (!pop2(l, r)) return run_trapped();
        stack.push_back(l < r ? 1 : 0);
        ++pc;
        break;
      case Op::Ieq:
        if (!pop2(l, r)) return run_trapped();
        stack.push_back(l == r ? 1 : 0);
        ++pc;
        break;
      case Op::Jmp: {
        std::size_t next = pc + 1 + static_cast<std::size_t>(ins.imm);
        if (next > n) return run_trapped();
        pc = next;
        break;
      }
      case Op::Jmpz: {
        if (stack.empty()) return run_trapped();
        std::int64_t v = stack.back();
        stack.pop_back();
        if (v == 0) {
          std::size_t next = pc + 1 + static_cast<std::size_t>(ins.imm);
          if (next > n) return run_trapped();
          pc = next;
        } else {
          ++pc;
        }
        break;
      }
      case Op::Trap:
        return run_trapped();
    }
  }
  if (stack.empty()) return run_trapped();
  return run_value(stack.back());
}

bool obs_equiv(const CompiledProgram& a, const CompiledProgram& b,
               const std::vector<Env>& suite, std::int64_t fuel) {
  if (a.v.index() != b.v.index()) return false;
  if (!a.is_code()) return true; // unsafe/bottom/error match by kind only
  if (suite.empty())
    throw std::invalid_argument("obs_equiv: empty input suite for code/code pair");
  const MachineCode& ca = *a.code();
  const MachineCode& cb = *b.code();
  for (const Env& env : suite)
    if (run_machine(ca, env, fuel) != run_machine(cb, env, fuel)) return false;
  return true;
}

MachineCode parse_machine(const std::string& text) {
  MachineCode out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string mnem;
    if (!(ls >> mnem) || mnem[0] == '#') continue;

    auto want_int = [&](bool non_negative) {
      std::string tok;
      if (!(ls >> tok))
        throw ParseError("missing operand for " + mnem, lineno, 1);
      try {
        std::size_t used = 0;
        long long v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        if (non_negative && v < 0)
          throw ParseError("negative offset for " + mnem, lineno, 1);
        return static_cast<std::int64_t>(v);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        throw ParseError("malformed operand '" + tok + "' for " + mnem, lineno, 1);
      }
    };

    if (mnem == "PUSHI") {
      out.instrs.push_back(pushi(want_int(false)));
    } else if (mnem == "LOADV") {
      std::string name;
      if (!(ls >> name))
        throw ParseError("missing variable name for LOADV", lineno, 1);
      if (!is_ident(name))
        throw ParseError("malformed variable name '" + name + "'", lineno, 1);
      out.instrs.push_back(loadv(name));
    } else if (mnem == "IADD") {
      out.instrs.push_back({Op::Iadd});
    } else if (mnem == "ISUB") {
      out.instrs.push_back({Op::Isub});
    } else if (mnem == "IMUL") {
      out.instrs.push_back({Op::Imul});
    } else if (mnem == "ILT") {
      out.instrs.push_back({Op::Ilt});
    } else if (mnem == "IEQ") {
      out.instrs.push_back({Op::Ieq});
    } else if (mnem == "JMP") {
      out.instrs.push_back(jmp(want_int(true)));
    } else if (mnem == "JMPZ") {
      out.instrs.push_back(jmpz(want_int(true)));
    } else if (mnem == "TRAP") {
      out.instrs.push_back({Op::Trap});
    } else {
      throw ParseError("unknown mnemonic '" + mnem + "'", lineno, 1);
    }
    std::string extra;
    if (ls >> extra)
      throw ParseError("trailing tokens after " + mnem, lineno, 1);
  }
  return out;
}

std::string format_machine(const MachineCode& code) {
  std::ostringstream out;
  for (const Instruction& ins : code.instrs) {
    switch (ins.op) {
      case Op::Pushi: out << "PUSHI " << ins.imm; break;
      case Op::Loadv: out << "LOADV " << ins.var; break;
      case Op::Iadd: out << "IADD"; break;
      case Op::Isub: out << "ISUB"; break;
      case Op::Imul: out << "IMUL"; break;
      case Op::Ilt: out << "ILT"; break;
      case Op::Ieq: out << "IEQ"; break;
      case Op::Jmp: out << "JMP " << ins.imm; break;
      case Op::Jmpz: out << "JMPZ " << ins.imm; break;
      case Op::Trap: out << "TRAP"; break;
    }
    out << '\n';
  }
  return out.str();
}

std::optional<std::string> validate_jumps(const MachineCode& code) {
  const std::size_t n = code.instrs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Instruction& ins = code.instrs[i];
    if (ins.op != Op::Jmp && ins.op != Op::Jmpz) continue;
    std::size_t target = i + 1 + static_cast<std::size_t>(ins.imm);
    if (target > n)
      return "jump at instruction " + std::to_string(i) + " lands at " +
             std::to_string(target) + ", past the program end " + std::to_string(n);
  }
  return std::nullopt;
}

std::vector<std::string> loadv_names(const MachineCode& code) {
  std::set<std::string> names;
  for (const Instruction& ins : code.instrs)
    if (ins.op == Op::Loadv) names.insert(ins.var);
  return {names.begin(), names.end()};
}

std::vector<Env> default_suite(const std::vector<std::string>& names) {
  static const std::int64_t kValues[] = {-3, -1, 0, 1, 2, 7, 100};
  constexpr std::size_t kNumValues = 7;
  constexpr std::size_t kCap = 64;

  std::vector<std::string> vars(names);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());

  if (vars.empty()) return {Env{}};

  // Enumerate the cross product lexicographically; first variable is the
  // most significant digit.
  std::size_t total = 1;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (total >= kCap) {
      total = kCap;
      break;
    }
    total *= kNumValues;
  }
  total = std::min(total, kCap);

  std::vector<Env> suite;
  suite.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Env env;
    std::size_t rem = idx;
    for (std::size_t vi = vars.size(); vi-- > 0;) {
      env.bindings[vars[vi]] = kValues[rem % kNumValues];
      rem /= kNumValues;
    }
    suite.push_back(std::move(env));
  }
  return suite;
}

std::vector<Env> default_suite_for(const MachineCode& a, const MachineCode& b) {
  std::vector<std::string> names = loadv_names(a);
  for (auto& n : loadv_names(b)) names.push_back(n);
  return default_suite(names);
}

} // namespace stagelab
