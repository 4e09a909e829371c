#include "stagelab/source.hpp"

#include <cctype>
#include <sstream>

namespace stagelab {

TermPtr make_lit(std::int64_t v) { return std::make_shared<SourceTerm>(SourceTerm{Lit{v}}); }
TermPtr make_bool(bool v) { return std::make_shared<SourceTerm>(SourceTerm{BoolLit{v}}); }
TermPtr make_var(std::string name) {
  return std::make_shared<SourceTerm>(SourceTerm{Var{std::move(name)}});
}
TermPtr make_bin(BinKind op, TermPtr l, TermPtr r) {
  return std::make_shared<SourceTerm>(SourceTerm{BinOp{op, std::move(l), std::move(r)}});
}
TermPtr make_cmp(CmpKind op, TermPtr l, TermPtr r) {
  return std::make_shared<SourceTerm>(SourceTerm{Cmp{op, std::move(l), std::move(r)}});
}
TermPtr make_if(TermPtr c, TermPtr t, TermPtr e) {
  return std::make_shared<SourceTerm>(
      SourceTerm{IfTerm{std::move(c), std::move(t), std::move(e)}});
}
TermPtr make_escape(TermPtr body) {
  return std::make_shared<SourceTerm>(SourceTerm{Escape{std::move(body)}});
}

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& na) {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, Lit>) {
          return na.value == nb.value;
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return na.value == nb.value;
        } else if constexpr (std::is_same_v<T, Var>) {
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return na.op == nb.op && term_equal(na.lhs, nb.lhs) && term_equal(na.rhs, nb.rhs);
        } else if constexpr (std::is_same_v<T, Cmp>) {
          return na.op == nb.op && term_equal(na.lhs, nb.lhs) && term_equal(na.rhs, nb.rhs);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          return term_equal(na.cond, nb.cond) &&
                 term_equal(na.then_branch, nb.then_branch) &&
                 term_equal(na.else_branch, nb.else_branch);
        } else {
          return term_equal(na.body, std::get<Escape>(b->node).body);
        }
      },
      a->node);
}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class Tok { Int, Ident, True, False, If, Then, Else, Plus, Minus, Star, Lt, Eq, Tilde, LParen, RParen, End };

struct Token {
  Tok kind;
  std::int64_t int_value = 0;
  std::string text;
  int line = 1, column = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      bump();
    current_ = Token{Tok::End, 0, "", line_, column_};
    if (pos_ >= text_.size()) return;

    current_.line = line_;
    current_.column = column_;
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        num += text_[pos_];
        bump();
      }
      current_.kind = Tok::Int;
      current_.int_value = std::stoll(num);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        id += text_[pos_];
        bump();
      }
      if (id == "if") current_.kind = Tok::If;
      else if (id == "then") current_.kind = Tok::Then;
      else if (id == "else") current_.kind = Tok::Else;
      else if (id == "true") current_.kind = Tok::True;
      else if (id == "false") current_.kind = Tok::False;
      else {
        current_.kind = Tok::Ident;
        current_.text = id;
      }
      return;
    }
    bump();
    switch (c) {
      case '+': current_.kind = Tok::Plus; return;
      case '-': current_.kind = Tok::Minus; return;
      case '*': current_.kind = Tok::Star; return;
      case '<': current_.kind = Tok::Lt; return;
      case '=': current_.kind = Tok::Eq; return;
      case '~': current_.kind = Tok::Tilde; return;
      case '(': current_.kind = Tok::LParen; return;
      case ')': current_.kind = Tok::RParen; return;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         current_.line, current_.column);
    }
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1, column_ = 1;
  Token current_;
};

class Parser {
public:
  explicit Parser(const std::string& text) : lex_(text) {}

  TermPtr parse() {
    TermPtr t = expr();
    const Token& tok = lex_.peek();
    if (tok.kind != Tok::End)
      throw ParseError("unexpected trailing input", tok.line, tok.column);
    return t;
  }

private:
  TermPtr expr() {
    if (lex_.peek().kind == Tok::If) {
      lex_.next();
      TermPtr c = expr();
      expect(Tok::Then, "'then'");
      TermPtr t = expr();
      expect(Tok::Else, "'else'");
      TermPtr e = expr();
      return make_if(std::move(c), std::move(t), std::move(e));
    }
    return cmp();
  }

  TermPtr cmp() {
    TermPtr t = add();
    while (true) {
      Tok k = lex_.peek().kind;
      if (k != Tok::Lt && k != Tok::Eq) return t;
      lex_.next();
      t = make_cmp(k == Tok::Lt ? CmpKind::Lt : CmpKind::Eq, std::move(t), add());
    }
  }

  TermPtr add() {
    TermPtr t = mul();
    while (true) {
      Tok k = lex_.peek().kind;
      if (k != Tok::Plus && k != Tok::Minus) return t;
      lex_.next();
      t = make_bin(k == Tok::Plus ? BinKind::Add : BinKind::Sub, std::move(t), mul());
    }
  }

  TermPtr mul() {
    TermPtr t = atom();
    while (lex_.peek().kind == Tok::Star) {
      lex_.next();
      t = make_bin(BinKind::Mul, std::move(t), atom());
    }
    return t;
  }

  TermPtr atom() {
    Token tok = lex_.next();
    switch (tok.kind) {
      case Tok::Int:
        return make_lit(tok.int_value);
      case Tok::Minus: { // negative integer literal only
        Token n = lex_.next();
        if (n.kind != Tok::Int)
          throw ParseError("expected integer after '-'", n.line, n.column);
        return make_lit(-n.int_value);
      }
      case Tok::True:
        return make_bool(true);
      case Tok::False:
        return make_bool(false);
      case Tok::Ident:
        return make_var(tok.text);
      case Tok::Tilde: {
        expect(Tok::LParen, "'(' after '~'");
        TermPtr body = expr();
        expect(Tok::RParen, "')'");
        return make_escape(std::move(body));
      }
      case Tok::LParen: {
        TermPtr t = expr();
        expect(Tok::RParen, "')'");
        return t;
      }
      default:
        throw ParseError("expected an expression", tok.line, tok.column);
    }
  }

  void expect(Tok kind, const char* what) {
    Token tok = lex_.next();
    if (tok.kind != kind)
      throw ParseError(std::string("expected ") + what, tok.line, tok.column);
  }

  Lexer lex_;
};

// Precedence levels for the printer; higher binds tighter.
enum Level { kLevelExpr = 0, kLevelCmp = 1, kLevelAdd = 2, kLevelMul = 3, kLevelAtom = 4 };

int level_of(const TermPtr& t) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IfTerm>) return kLevelExpr;
        else if constexpr (std::is_same_v<T, Cmp>) return kLevelCmp;
        else if constexpr (std::is_same_v<T, BinOp>)
          return n.op == BinKind::Mul ? kLevelMul : kLevelAdd;
        else
          return kLevelAtom;
      },
      t->node);
}

void print_term(std::ostream& out, const TermPtr& t);

// A child prints parenthesized when its level is too loose for the slot.
// Right operands require one level more than left ones (left associativity).
void print_child(std::ostream& out, const TermPtr& t, int min_level) {
  if (level_of(t) < min_level) {
    out << '(';
    print_term(out, t);
    out << ')';
  } else {
    print_term(out, t);
  }
}

void print_term(std::ostream& out, const TermPtr& t) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) {
          out << n.value;
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          out << (n.value ? "true" : "false");
        } else if constexpr (std::is_same_v<T, Var>) {
          out << n.name;
        } else if constexpr (std::is_same_v<T, BinOp>) {
          int lvl = n.op == BinKind::Mul ? kLevelMul : kLevelAdd;
          const char* sym =
              n.op == BinKind::Add ? " + " : n.op == BinKind::Sub ? " - " : " * ";
          print_child(out, n.lhs, lvl);
          out << sym;
          print_child(out, n.rhs, lvl + 1);
        } else if constexpr (std::is_same_v<T, Cmp>) {
          print_child(out, n.lhs, kLevelCmp);
          out << (n.op == CmpKind::Lt ? " < " : " = ");
          print_child(out, n.rhs, kLevelCmp + 1);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          out << "if ";
          print_term(out, n.cond);
          out << " then ";
          print_term(out, n.then_branch);
          out << " else ";
          print_term(out, n.else_branch);
        } else { // Escape
          out << "~(";
          print_term(out, n.body);
          out << ')';
        }
      },
      t->node);
}

} // namespace

TermPtr parse_source(const std::string& text) { return Parser(text).parse(); }

std::string format_source(const TermPtr& t) {
  std::ostringstream out;
  print_term(out, t);
  return out.str();
}

namespace {

void collect_free(const TermPtr& t, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Var>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, Cmp>) {
          collect_free(n.lhs, out);
          collect_free(n.rhs, out);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          collect_free(n.cond, out);
          collect_free(n.then_branch, out);
          collect_free(n.else_branch, out);
        } else if constexpr (std::is_same_v<T, Escape>) {
          collect_free(n.body, out);
        }
      },
      t->node);
}

} // namespace

std::set<std::string> free_vars(const TermPtr& t) {
  std::set<std::string> out;
  collect_free(t, out);
  return out;
}

bool escapes_closed(const TermPtr& t) {
  return std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Escape>) {
          return free_vars(n.body).empty();
        } else if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, Cmp>) {
          return escapes_closed(n.lhs) && escapes_closed(n.rhs);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          return escapes_closed(n.cond) && escapes_closed(n.then_branch) &&
                 escapes_closed(n.else_branch);
        } else {
          return true;
        }
      },
      t->node);
}

bool member_la(const std::string& text) {
  try {
    return escapes_closed(parse_source(text));
  } catch (const ParseError&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Compile-time evaluation of escape bodies

namespace {

EscapeResult eval_closed(const TermPtr& t, std::int64_t& fuel) {
  if (fuel <= 0) return EvalDiverged{};
  --fuel;
  return std::visit(
      [&](const auto& n) -> EscapeResult {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) {
          return SourceValue{false, n.value};
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return SourceValue{true, n.value ? 1 : 0};
        } else if constexpr (std::is_same_v<T, Var>) {
          return EvalFault{"free variable '" + n.name + "' in escape body"};
        } else if constexpr (std::is_same_v<T, BinOp>) {
          EscapeResult l = eval_closed(n.lhs, fuel);
          if (!std::holds_alternative<SourceValue>(l)) return l;
          EscapeResult r = eval_closed(n.rhs, fuel);
          if (!std::holds_alternative<SourceValue>(r)) return r;
          auto lv = std::get<SourceValue>(l), rv = std::get<SourceValue>(r);
          if (lv.is_bool || rv.is_bool)
            return EvalFault{"arithmetic on a boolean"};
          switch (n.op) {
            case BinKind::Add: return SourceValue{false, lv.v + rv.v};
            case BinKind::Sub: return SourceValue{false, lv.v - rv.v};
            default: return SourceValue{false, lv.v * rv.v};
          }
        } else if constexpr (std::is_same_v<T, Cmp>) {
          EscapeResult l = eval_closed(n.lhs, fuel);
          if (!std::holds_alternative<SourceValue>(l)) return l;
          EscapeResult r = eval_closed(n.rhs, fuel);
          if (!std::holds_alternative<SourceValue>(r)) return r;
          auto lv = std::get<SourceValue>(l), rv = std::get<SourceValue>(r);
          if (lv.is_bool || rv.is_bool)
            return EvalFault{"comparison on a boolean"};
          bool res = n.op == CmpKind::Lt ? lv.v < rv.v : lv.v == rv.v;
          return SourceValue{true, res ? 1 : 0};
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          EscapeResult c = eval_closed(n.cond, fuel);
          if (!std::holds_alternative<SourceValue>(c)) return c;
          auto cv = std::get<SourceValue>(c);
          if (!cv.is_bool) return EvalFault{"non-boolean condition"};
          return eval_closed(cv.v != 0 ? n.then_branch : n.else_branch, fuel);
        } else { // Escape: nested escapes evaluate innermost first
          return eval_closed(n.body, fuel);
        }
      },
      t->node);
}

} // namespace

EscapeResult eval_escape(const TermPtr& body, std::int64_t fuel) {
  return eval_closed(body, fuel);
}

std::variant<TermPtr, EvalDiverged, EvalFault> resolve_escapes(const TermPtr& t,
                                                               std::int64_t fuel) {
  using Out = std::variant<TermPtr, EvalDiverged, EvalFault>;
  return std::visit(
      [&](const auto& n) -> Out {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Escape>) {
          EscapeResult r = eval_closed(n.body, fuel);
          if (auto* v = std::get_if<SourceValue>(&r))
            return v->is_bool ? make_bool(v->v != 0) : make_lit(v->v);
          if (std::holds_alternative<EvalDiverged>(r)) return EvalDiverged{};
          return std::get<EvalFault>(r);
        } else if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, Cmp>) {
          Out l = resolve_escapes(n.lhs, fuel);
          if (!std::holds_alternative<TermPtr>(l)) return l;
          Out r = resolve_escapes(n.rhs, fuel);
          if (!std::holds_alternative<TermPtr>(r)) return r;
          if constexpr (std::is_same_v<T, BinOp>)
            return make_bin(n.op, std::get<TermPtr>(l), std::get<TermPtr>(r));
          else
            return make_cmp(n.op, std::get<TermPtr>(l), std::get<TermPtr>(r));
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          Out c = resolve_escapes(n.cond, fuel);
          if (!std::holds_alternative<TermPtr>(c)) return c;
          Out th = resolve_escapes(n.then_branch, fuel);
          if (!std::holds_alternative<TermPtr>(th)) return th;
          Out el = resolve_escapes(n.else_branch, fuel);
          if (!std::holds_alternative<TermPtr>(el)) return el;
          return make_if(std::get<TermPtr>(c), std::get<TermPtr>(th),
                         std::get<TermPtr>(el));
        } else {
          return t;
        }
      },
      t->node);
}

// ---------------------------------------------------------------------------
// Code emission

namespace {

void emit(const TermPtr& t, std::vector<Instruction>& out) {
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
          emit(n.lhs, out);
          emit(n.rhs, out);
          out.push_back({n.op == BinKind::Add ? Op::Iadd
                         : n.op == BinKind::Sub ? Op::Isub
                                                : Op::Imul});
        } else if constexpr (std::is_same_v<T, Cmp>) {
          emit(n.lhs, out);
          emit(n.rhs, out);
          out.push_back({n.op == CmpKind::Lt ? Op::Ilt : Op::Ieq});
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          emit(n.cond, out);
          std::vector<Instruction> then_code, else_code;
          emit(n.then_branch, then_code);
          emit(n.else_branch, else_code);
          out.push_back(jmpz(static_cast<std::int64_t>(then_code.size()) + 1));
          out.insert(out.end(), then_code.begin(), then_code.end());
          out.push_back(jmp(static_cast<std::int64_t>(else_code.size())));
          out.insert(out.end(), else_code.begin(), else_code.end());
        } else {
          // unreachable: escapes are resolved before emission
        }
      },
      t->node);
}

} // namespace

CompiledProgram compile_a(const TermPtr& p, std::int64_t fuel) {
  if (!escapes_closed(p))
    return compiled_error("not a language member: open escape body");
  auto resolved = resolve_escapes(p, fuel);
  if (std::holds_alternative<EvalDiverged>(resolved)) return compiled_bottom();
  if (auto* f = std::get_if<EvalFault>(&resolved))
    return compiled_error("escape evaluation: " + f->message);
  MachineCode code;
  emit(std::get<TermPtr>(resolved), code.instrs);
  return compiled_code(std::move(code));
}

// ---------------------------------------------------------------------------
// Safety judgment

namespace {

std::variant<SType, std::string> infer(const TermPtr& t) {
  using Out = std::variant<SType, std::string>;
  return std::visit(
      [&](const auto& n) -> Out {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) {
          return SType::Int;
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return SType::Bool;
        } else if constexpr (std::is_same_v<T, Var>) {
          return SType::Int; // free variables are ints by convention
        } else if constexpr (std::is_same_v<T, BinOp>) {
          Out l = infer(n.lhs);
          if (std::holds_alternative<std::string>(l)) return l;
          Out r = infer(n.rhs);
          if (std::holds_alternative<std::string>(r)) return r;
          if (std::get<SType>(l) != SType::Int || std::get<SType>(r) != SType::Int)
            return std::string("arithmetic operand is not an int in '") +
                   format_source(t) + "'";
          return SType::Int;
        } else if constexpr (std::is_same_v<T, Cmp>) {
          Out l = infer(n.lhs);
          if (std::holds_alternative<std::string>(l)) return l;
          Out r = infer(n.rhs);
          if (std::holds_alternative<std::string>(r)) return r;
          if (std::get<SType>(l) != SType::Int || std::get<SType>(r) != SType::Int)
            return std::string("comparison operand is not an int in '") +
                   format_source(t) + "'";
          return SType::Bool;
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          Out c = infer(n.cond);
          if (std::holds_alternative<std::string>(c)) return c;
          if (std::get<SType>(c) != SType::Bool)
            return std::string("condition is not a bool in '") + format_source(t) + "'";
          Out th = infer(n.then_branch);
          if (std::holds_alternative<std::string>(th)) return th;
          Out el = infer(n.else_branch);
          if (std::holds_alternative<std::string>(el)) return el;
          if (std::get<SType>(th) != std::get<SType>(el))
            return std::string("branch types differ in '") + format_source(t) + "'";
          return th;
        } else { // Escape
          if (!free_vars(n.body).empty())
            return std::string("escape body is not closed in '") + format_source(t) + "'";
          return infer(n.body);
        }
      },
      t->node);
}

} // namespace

SafetyJudgment typecheck(const TermPtr& p) {
  auto r = infer(p);
  if (auto* ty = std::get_if<SType>(&r)) return {*ty, ""};
  return {std::nullopt, std::get<std::string>(r)};
}

CompiledProgram compile_a_safe(const TermPtr& p, std::int64_t fuel) {
  if (!typecheck(p).safe()) return compiled_unsafe();
  return compile_a(p, fuel);
}

} // namespace stagelab
