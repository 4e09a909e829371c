#include "stagelab/generator.hpp"

namespace stagelab {

namespace {

const char* kVarPool[] = {"x", "y", "z", "a", "b"};

// Collects rebuild paths to every integer literal outside any escape.
void collect_lit_paths(const TermPtr& t, std::vector<std::size_t>& path,
                       std::vector<std::vector<std::size_t>>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) {
          out.push_back(path);
        } else if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, Cmp>) {
          path.push_back(0);
          collect_lit_paths(n.lhs, path, out);
          path.back() = 1;
          collect_lit_paths(n.rhs, path, out);
          path.pop_back();
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          path.push_back(0);
          collect_lit_paths(n.cond, path, out);
          path.back() = 1;
          collect_lit_paths(n.then_branch, path, out);
          path.back() = 2;
          collect_lit_paths(n.else_branch, path, out);
          path.pop_back();
        }
        // not descending into escapes
      },
      t->node);
}

TermPtr replace_at(const TermPtr& t, const std::vector<std::size_t>& path,
                   std::size_t depth, const TermPtr& replacement) {
  if (depth == path.size()) return replacement;
  std::size_t slot = path[depth];
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinOp>) {
          return make_bin(n.op,
                          slot == 0 ? replace_at(n.lhs, path, depth + 1, replacement) : n.lhs,
                          slot == 1 ? replace_at(n.rhs, path, depth + 1, replacement) : n.rhs);
        } else if constexpr (std::is_same_v<T, Cmp>) {
          return make_cmp(n.op,
                          slot == 0 ? replace_at(n.lhs, path, depth + 1, replacement) : n.lhs,
                          slot == 1 ? replace_at(n.rhs, path, depth + 1, replacement) : n.rhs);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          return make_if(
              slot == 0 ? replace_at(n.cond, path, depth + 1, replacement) : n.cond,
              slot == 1 ? replace_at(n.then_branch, path, depth + 1, replacement)
                        : n.then_branch,
              slot == 2 ? replace_at(n.else_branch, path, depth + 1, replacement)
                        : n.else_branch);
        } else {
          return t; // unreachable on a valid path
        }
      },
      t->node);
}

const Lit* lit_at(const TermPtr& t, const std::vector<std::size_t>& path,
                  std::size_t depth) {
  if (depth == path.size()) return std::get_if<Lit>(&t->node);
  std::size_t slot = path[depth];
  return std::visit(
      [&](const auto& n) -> const Lit* {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, Cmp>) {
          return lit_at(slot == 0 ? n.lhs : n.rhs, path, depth + 1);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          return lit_at(slot == 0 ? n.cond : slot == 1 ? n.then_branch : n.else_branch,
                        path, depth + 1);
        } else {
          return nullptr;
        }
      },
      t->node);
}

} // namespace

std::int64_t TermGen::small_int() {
  return std::uniform_int_distribution<std::int64_t>(-9, 9)(rng_);
}

std::string TermGen::var_name() {
  return kVarPool[std::uniform_int_distribution<std::size_t>(0, 4)(rng_)];
}

TermPtr TermGen::typed_term(SType type, int max_depth, bool allow_vars) {
  if (max_depth <= 0) {
    if (type == SType::Bool)
      return make_bool(std::uniform_int_distribution<int>(0, 1)(rng_) != 0);
    if (allow_vars && std::uniform_int_distribution<int>(0, 2)(rng_) == 0)
      return make_var(var_name());
    return make_lit(small_int());
  }

  if (type == SType::Int) {
    switch (std::uniform_int_distribution<int>(0, 5)(rng_)) {
      case 0:
        return make_lit(small_int());
      case 1:
        return allow_vars ? make_var(var_name()) : make_lit(small_int());
      case 2:
      case 3: {
        auto op = static_cast<BinKind>(std::uniform_int_distribution<int>(0, 2)(rng_));
        return make_bin(op, typed_term(SType::Int, max_depth - 1, allow_vars),
                        typed_term(SType::Int, max_depth - 1, allow_vars));
      }
      case 4:
        return make_if(typed_term(SType::Bool, max_depth - 1, allow_vars),
                       typed_term(SType::Int, max_depth - 1, allow_vars),
                       typed_term(SType::Int, max_depth - 1, allow_vars));
      default:
        // escape bodies must be closed
        return make_escape(typed_term(SType::Int, std::min(max_depth - 1, 3), false));
    }
  }

  switch (std::uniform_int_distribution<int>(0, 3)(rng_)) {
    case 0:
      return make_bool(std::uniform_int_distribution<int>(0, 1)(rng_) != 0);
    case 1:
    case 2: {
      auto op = static_cast<CmpKind>(std::uniform_int_distribution<int>(0, 1)(rng_));
      return make_cmp(op, typed_term(SType::Int, max_depth - 1, allow_vars),
                      typed_term(SType::Int, max_depth - 1, allow_vars));
    }
    default:
      return make_if(typed_term(SType::Bool, max_depth - 1, allow_vars),
                     typed_term(SType::Bool, max_depth - 1, allow_vars),
                     typed_term(SType::Bool, max_depth - 1, allow_vars));
  }
}

TermPtr TermGen::ill_typed_term(int max_depth) {
  // Any ill-typed subterm makes the whole term fail the judgment, so a
  // planted error anywhere suffices.
  TermPtr bad;
  switch (std::uniform_int_distribution<int>(0, 2)(rng_)) {
    case 0: // arithmetic on a boolean
      bad = make_bin(BinKind::Add, typed_term(SType::Int, 1),
                     make_bool(std::uniform_int_distribution<int>(0, 1)(rng_) != 0));
      break;
    case 1: // integer condition
      bad = make_if(typed_term(SType::Int, 1), typed_term(SType::Int, 1),
                    typed_term(SType::Int, 1));
      break;
    default: // branch type mismatch
      bad = make_if(typed_term(SType::Bool, 1), typed_term(SType::Int, 1),
                    typed_term(SType::Bool, 1));
      break;
  }
  switch (std::uniform_int_distribution<int>(0, 2)(rng_)) {
    case 0:
      return bad;
    case 1:
      return make_bin(BinKind::Add, bad, typed_term(SType::Int, max_depth - 1));
    default:
      return make_if(typed_term(SType::Bool, max_depth - 1), bad,
                     typed_term(SType::Int, max_depth - 1));
  }
}

std::optional<TermPtr> TermGen::escape_rewrite(const TermPtr& t) {
  std::vector<std::vector<std::size_t>> paths;
  std::vector<std::size_t> path;
  collect_lit_paths(t, path, paths);
  if (paths.empty()) return std::nullopt;

  const auto& chosen =
      paths[std::uniform_int_distribution<std::size_t>(0, paths.size() - 1)(rng_)];
  const Lit* lit = lit_at(t, chosen, 0);
  if (!lit) return std::nullopt;

  std::int64_t n = lit->value;
  std::int64_t k = std::uniform_int_distribution<std::int64_t>(-5, 5)(rng_);
  TermPtr body;
  switch (std::uniform_int_distribution<int>(0, 2)(rng_)) {
    case 0:
      body = make_bin(BinKind::Add, make_lit(n - k), make_lit(k));
      break;
    case 1:
      body = make_bin(BinKind::Sub, make_lit(n + k), make_lit(k));
      break;
    default:
      // nested escape computing the same value
      body = make_escape(make_bin(BinKind::Add, make_lit(n - k), make_lit(k)));
      break;
  }
  return replace_at(t, chosen, 0, make_escape(std::move(body)));
}

std::vector<TermPtr> TermGen::corpus(std::size_t n, int max_depth,
                                     bool inject_duplicates) {
  std::vector<TermPtr> out;
  out.reserve(n);
  while (out.size() < n) {
    SType type = std::uniform_int_distribution<int>(0, 3)(rng_) == 0 ? SType::Bool
                                                                     : SType::Int;
    TermPtr t = typed_term(type, max_depth);
    out.push_back(t);
    if (inject_duplicates && out.size() < n) {
      if (auto dup = escape_rewrite(t)) out.push_back(*dup);
    }
  }
  return out;
}

std::vector<TermPtr> TermGen::safety_corpus(std::size_t n, int max_depth,
                                            double ill_typed_fraction) {
  std::vector<TermPtr> out;
  out.reserve(n);
  std::bernoulli_distribution ill(ill_typed_fraction);
  for (std::size_t i = 0; i < n; ++i) {
    if (ill(rng_))
      out.push_back(ill_typed_term(max_depth));
    else
      out.push_back(typed_term(SType::Int, max_depth));
  }
  return out;
}

MachineCode TermGen::machine_program(int max_len) {
  int len = std::uniform_int_distribution<int>(1, std::max(1, max_len))(rng_);
  MachineCode code;
  code.instrs.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    int remaining = len - i - 1;
    switch (std::uniform_int_distribution<int>(0, 9)(rng_)) {
      case 0:
      case 1:
      case 2:
        code.instrs.push_back(pushi(small_int()));
        break;
      case 3:
        code.instrs.push_back(loadv(var_name()));
        break;
      case 4:
        code.instrs.push_back({Op::Iadd});
        break;
      case 5:
        code.instrs.push_back({Op::Isub});
        break;
      case 6:
        code.instrs.push_back({Op::Imul});
        break;
      case 7:
        code.instrs.push_back({std::uniform_int_distribution<int>(0, 1)(rng_) ? Op::Ilt
                                                                              : Op::Ieq});
        break;
      case 8:
        code.instrs.push_back(
            jmp(std::uniform_int_distribution<int>(0, std::max(0, remaining))(rng_)));
        break;
      default:
        code.instrs.push_back(
            jmpz(std::uniform_int_distribution<int>(0, std::max(0, remaining))(rng_)));
        break;
    }
  }
  return code;
}

} // namespace stagelab
