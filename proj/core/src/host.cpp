#include "stagelab/host.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace stagelab {

namespace {

MetaPtr node(MetaExpr e) { return std::make_shared<MetaExpr>(std::move(e)); }

} // namespace

MetaPtr m_int(std::int64_t v) { return node({MIntLit{v}}); }
MetaPtr m_bool(bool v) { return node({MBoolLit{v}}); }
MetaPtr m_var(std::string name) { return node({MVarRef{std::move(name)}}); }
MetaPtr m_lambda(std::string param, MetaPtr body) {
  return node({MLambda{std::move(param), std::move(body)}});
}
MetaPtr m_apply(MetaPtr fn, MetaPtr arg) {
  return node({MApply{std::move(fn), std::move(arg)}});
}
MetaPtr m_fix(MetaPtr fn) { return node({MFix{std::move(fn)}}); }
MetaPtr m_prim(std::string name) { return node({MPrimRef{std::move(name)}}); }
MetaPtr m_if(MetaPtr c, MetaPtr t, MetaPtr e) {
  return node({MIf{std::move(c), std::move(t), std::move(e)}});
}
MetaPtr m_bin(char op, MetaPtr l, MetaPtr r) {
  return node({MBinPrim{op, std::move(l), std::move(r)}});
}
MetaPtr m_quote_a(TermPtr term) { return node({MQuoteA{std::move(term)}}); }
MetaPtr m_quote_m(MachineCode code) { return node({MQuoteM{std::move(code)}}); }
MetaPtr m_nil() { return node({MNil{}}); }
MetaPtr m_cons(MetaPtr h, MetaPtr t) { return node({MCons{std::move(h), std::move(t)}}); }
MetaPtr m_head(MetaPtr e) { return node({MHead{std::move(e)}}); }
MetaPtr m_tail(MetaPtr e) { return node({MTail{std::move(e)}}); }
MetaPtr m_hole() { return node({MHole{}}); }

bool meta_equal(const MetaPtr& a, const MetaPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& na) {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, MIntLit>) return na.value == nb.value;
        else if constexpr (std::is_same_v<T, MBoolLit>) return na.value == nb.value;
        else if constexpr (std::is_same_v<T, MVarRef>) return na.name == nb.name;
        else if constexpr (std::is_same_v<T, MLambda>)
          return na.param == nb.param && meta_equal(na.body, nb.body);
        else if constexpr (std::is_same_v<T, MApply>)
          return meta_equal(na.fn, nb.fn) && meta_equal(na.arg, nb.arg);
        else if constexpr (std::is_same_v<T, MFix>) return meta_equal(na.fn, nb.fn);
        else if constexpr (std::is_same_v<T, MPrimRef>) return na.name == nb.name;
        else if constexpr (std::is_same_v<T, MIf>)
          return meta_equal(na.cond, nb.cond) &&
                 meta_equal(na.then_branch, nb.then_branch) &&
                 meta_equal(na.else_branch, nb.else_branch);
        else if constexpr (std::is_same_v<T, MBinPrim>)
          return na.op == nb.op && meta_equal(na.lhs, nb.lhs) && meta_equal(na.rhs, nb.rhs);
        else if constexpr (std::is_same_v<T, MQuoteA>) return term_equal(na.term, nb.term);
        else if constexpr (std::is_same_v<T, MQuoteM>) return na.code == nb.code;
        else if constexpr (std::is_same_v<T, MCons>)
          return meta_equal(na.head, nb.head) && meta_equal(na.tail, nb.tail);
        else if constexpr (std::is_same_v<T, MHead>) return meta_equal(na.arg, nb.arg);
        else if constexpr (std::is_same_v<T, MTail>) return meta_equal(na.arg, nb.arg);
        else
          return true; // MNil, MHole
      },
      a->node);
}

// ---------------------------------------------------------------------------
// Codes

ValuePtr encode_source(const TermPtr& p) {
  return std::make_shared<MetaValue>(MetaValue{VCodeA{p}});
}
ValuePtr encode_machine(const MachineCode& m) {
  return std::make_shared<MetaValue>(MetaValue{VCodeM{m}});
}
const TermPtr* decode_source(const ValuePtr& v) {
  auto* c = std::get_if<VCodeA>(&v->v);
  return c ? &c->term : nullptr;
}
const MachineCode* decode_machine(const ValuePtr& v) {
  auto* c = std::get_if<VCodeM>(&v->v);
  return c ? &c->code : nullptr;
}

std::string canonical_code(const ValuePtr& v) {
  if (auto* a = std::get_if<VCodeA>(&v->v)) return "A:" + format_source(a->term);
  if (auto* m = std::get_if<VCodeM>(&v->v)) return "M:" + format_machine(m->code);
  throw std::invalid_argument("canonical_code: not a code value");
}

MetaPtr quote_value(const ValuePtr& v) {
  if (auto* a = std::get_if<VCodeA>(&v->v)) return m_quote_a(a->term);
  if (auto* m = std::get_if<VCodeM>(&v->v)) return m_quote_m(m->code);
  if (auto* i = std::get_if<VInt>(&v->v)) return m_int(i->value);
  if (auto* b = std::get_if<VBool>(&v->v)) return m_bool(b->value);
  throw std::invalid_argument("quote_value: value has no expression form");
}

// ---------------------------------------------------------------------------
// Evaluation

struct MetaEnv {
  std::unordered_map<std::string, ValuePtr> vars;
  MetaEnvPtr parent;
};

namespace {

// Non-tail recursion deeper than this is treated as divergence rather
// than risking the process stack.
constexpr int kMaxEvalDepth = 4000;

ValuePtr value(MetaValue v) { return std::make_shared<MetaValue>(std::move(v)); }

const ValuePtr* lookup(const MetaEnvPtr& env, const std::string& name) {
  for (const MetaEnv* e = env.get(); e != nullptr; e = e->parent.get()) {
    auto it = e->vars.find(name);
    if (it != e->vars.end()) return &it->second;
  }
  return nullptr;
}

bool known_prim(const std::string& name) {
  return name == "compile_a" || name == "compile_a_safe" || name == "typecheck_a" ||
         name == "fold_consts";
}

TermPtr fold_consts_term(const TermPtr& t) {
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinOp>) {
          TermPtr l = fold_consts_term(n.lhs);
          TermPtr r = fold_consts_term(n.rhs);
          auto* ll = std::get_if<Lit>(&l->node);
          auto* rl = std::get_if<Lit>(&r->node);
          if (ll && rl) {
            switch (n.op) {
              case BinKind::Add: return make_lit(ll->value + rl->value);
              case BinKind::Sub: return make_lit(ll->value - rl->value);
              case BinKind::Mul: return make_lit(ll->value * rl->value);
            }
          }
          return make_bin(n.op, std::move(l), std::move(r));
        } else if constexpr (std::is_same_v<T, Cmp>) {
          TermPtr l = fold_consts_term(n.lhs);
          TermPtr r = fold_consts_term(n.rhs);
          auto* ll = std::get_if<Lit>(&l->node);
          auto* rl = std::get_if<Lit>(&r->node);
          if (ll && rl)
            return make_bool(n.op == CmpKind::Lt ? ll->value < rl->value
                                                 : ll->value == rl->value);
          return make_cmp(n.op, std::move(l), std::move(r));
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          TermPtr c = fold_consts_term(n.cond);
          if (auto* cb = std::get_if<BoolLit>(&c->node))
            return fold_consts_term(cb->value ? n.then_branch : n.else_branch);
          return make_if(std::move(c), fold_consts_term(n.then_branch),
                         fold_consts_term(n.else_branch));
        } else if constexpr (std::is_same_v<T, Escape>) {
          return make_escape(fold_consts_term(n.body));
        } else {
          return t;
        }
      },
      t->node);
}

MetaResult apply_prim(const std::string& name, const ValuePtr& arg, std::int64_t fuel) {
  auto want_code_a = [&]() -> const TermPtr* { return decode_source(arg); };

  if (name == "compile_a" || name == "compile_a_safe") {
    const TermPtr* p = want_code_a();
    if (!p) return MetaError{name + ": argument is not a source code value"};
    CompiledProgram out =
        name == "compile_a" ? compile_a(*p, fuel) : compile_a_safe(*p, fuel);
    if (auto* code = out.code()) return value({VCodeM{*code}});
    if (out.is_unsafe()) return value({VUnsafe{}});
    if (out.is_bottom()) return MetaFuelExhausted{};
    return MetaError{*out.error_message()};
  }
  if (name == "typecheck_a") {
    const TermPtr* p = want_code_a();
    if (!p) return MetaError{"typecheck_a: argument is not a source code value"};
    return value({VBool{typecheck(*p).safe()}});
  }
  if (name == "fold_consts") {
    const TermPtr* p = want_code_a();
    if (!p) return MetaError{"fold_consts: argument is not a source code value"};
    return value({VCodeA{fold_consts_term(*p)}});
  }
  return MetaError{"unknown primitive '" + name + "'"};
}

MetaResult eval(MetaPtr e, MetaEnvPtr env, std::int64_t& fuel, int depth) {
  if (depth > kMaxEvalDepth) return MetaFuelExhausted{};
  while (true) {
    if (fuel <= 0) return MetaFuelExhausted{};
    --fuel;

    const MetaExpr& cur = *e;
    if (auto* n = std::get_if<MIntLit>(&cur.node)) return value({VInt{n->value}});
    if (auto* n = std::get_if<MBoolLit>(&cur.node)) return value({VBool{n->value}});
    if (auto* n = std::get_if<MVarRef>(&cur.node)) {
      if (const ValuePtr* v = lookup(env, n->name)) return *v;
      return MetaError{"unbound variable '" + n->name + "'"};
    }
    if (auto* n = std::get_if<MLambda>(&cur.node))
      return value({VClosure{n->param, n->body, env}});
    if (auto* n = std::get_if<MPrimRef>(&cur.node)) {
      if (!known_prim(n->name)) return MetaError{"unknown primitive '" + n->name + "'"};
      return value({VPrim{n->name}});
    }
    if (std::get_if<MQuoteA>(&cur.node))
      return value({VCodeA{std::get<MQuoteA>(cur.node).term}});
    if (std::get_if<MQuoteM>(&cur.node))
      return value({VCodeM{std::get<MQuoteM>(cur.node).code}});
    if (std::get_if<MNil>(&cur.node)) return value({VList{}});
    if (std::get_if<MHole>(&cur.node))
      return MetaError{"unfilled program hole"};

    if (auto* n = std::get_if<MApply>(&cur.node)) {
      MetaResult f = eval(n->fn, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(f)) return f;
      MetaResult a = eval(n->arg, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(a)) return a;
      const ValuePtr& fv = std::get<ValuePtr>(f);
      if (auto* clos = std::get_if<VClosure>(&fv->v)) {
        auto frame = std::make_shared<MetaEnv>();
        frame->parent = clos->env;
        frame->vars[clos->param] = std::get<ValuePtr>(a);
        env = frame;
        e = clos->body; // tail call
        continue;
      }
      if (auto* prim = std::get_if<VPrim>(&fv->v))
        return apply_prim(prim->name, std::get<ValuePtr>(a), fuel);
      return MetaError{"application of a non-function"};
    }
    if (auto* n = std::get_if<MFix>(&cur.node)) {
      MetaResult f = eval(n->fn, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(f)) return f;
      const ValuePtr& fv = std::get<ValuePtr>(f);
      auto* clos = std::get_if<VClosure>(&fv->v);
      if (!clos) return MetaError{"fix of a non-function"};
      auto* inner = std::get_if<MLambda>(&clos->body->node);
      if (!inner) return MetaError{"fix operand must be a curried functional"};
      auto frame = std::make_shared<MetaEnv>();
      frame->parent = clos->env;
      ValuePtr rec = value({VClosure{inner->param, inner->body, frame}});
      frame->vars[clos->param] = rec; // ties the recursive knot
      return rec;
    }
    if (auto* n = std::get_if<MIf>(&cur.node)) {
      MetaResult c = eval(n->cond, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(c)) return c;
      auto* b = std::get_if<VBool>(&std::get<ValuePtr>(c)->v);
      if (!b) return MetaError{"if condition is not a boolean"};
      e = b->value ? n->then_branch : n->else_branch; // tail position
      continue;
    }
    if (auto* n = std::get_if<MBinPrim>(&cur.node)) {
      MetaResult l = eval(n->lhs, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(l)) return l;
      MetaResult r = eval(n->rhs, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(r)) return r;
      auto* li = std::get_if<VInt>(&std::get<ValuePtr>(l)->v);
      auto* ri = std::get_if<VInt>(&std::get<ValuePtr>(r)->v);
      if (!li || !ri)
        return MetaError{std::string("operands of '") + n->op + "' are not integers"};
      switch (n->op) {
        case '+': return value({VInt{li->value + ri->value}});
        case '-': return value({VInt{li->value - ri->value}});
        case '*': return value({VInt{li->value * ri->value}});
        case '<': return value({VBool{li->value < ri->value}});
        case '=': return value({VBool{li->value == ri->value}});
        default: return MetaError{std::string("unknown operator '") + n->op + "'"};
      }
    }
    if (auto* n = std::get_if<MCons>(&cur.node)) {
      MetaResult h = eval(n->head, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(h)) return h;
      MetaResult t = eval(n->tail, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(t)) return t;
      auto* list = std::get_if<VList>(&std::get<ValuePtr>(t)->v);
      if (!list) return MetaError{"cons onto a non-list"};
      VList out;
      out.items.reserve(list->items.size() + 1);
      out.items.push_back(std::get<ValuePtr>(h));
      out.items.insert(out.items.end(), list->items.begin(), list->items.end());
      return value({std::move(out)});
    }
    if (auto* n = std::get_if<MHead>(&cur.node)) {
      MetaResult a = eval(n->arg, env, fuel, depth + 1);
      if (!std::holds_alternative<ValuePtr>(a)) return a;
      auto* list = std::get_if<VList>(&std::get<ValuePtr>(a)->v);
      if (!list || list->items.empty()) return MetaError{"head of a non-list or empty list"};
      return list->items.front();
    }
    auto* n = std::get_if<MTail>(&cur.node);
    MetaResult a = eval(n->arg, env, fuel, depth + 1);
    if (!std::holds_alternative<ValuePtr>(a)) return a;
    auto* list = std::get_if<VList>(&std::get<ValuePtr>(a)->v);
    if (!list || list->items.empty()) return MetaError{"tail of a non-list or empty list"};
    VList out;
    out.items.assign(list->items.begin() + 1, list->items.end());
    return value({std::move(out)});
  }
}

} // namespace

MetaResult meta_eval(const MetaPtr& e, std::int64_t fuel) {
  return eval(e, nullptr, fuel, 0);
}

CompiledProgram compile_u(const HostProgram& p, std::int64_t fuel) {
  MetaResult r = meta_eval(p.emit_arg, fuel);
  if (std::holds_alternative<MetaFuelExhausted>(r)) return compiled_bottom();
  if (auto* err = std::get_if<MetaError>(&r)) return compiled_error(err->message);
  const ValuePtr& v = std::get<ValuePtr>(r);
  if (auto* m = std::get_if<VCodeM>(&v->v)) return compiled_code(m->code);
  if (std::holds_alternative<VUnsafe>(v->v)) return compiled_unsafe();
  return compiled_error("emit argument did not evaluate to machine code");
}

HostProgram interp_program(MetaPtr code_expr) { return HostProgram{std::move(code_expr)}; }

namespace {

MetaPtr map_holes(const MetaPtr& e, const std::function<MetaPtr()>& fill,
                  std::size_t& count) {
  return std::visit(
      [&](const auto& n) -> MetaPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, MHole>) {
          ++count;
          return fill();
        } else if constexpr (std::is_same_v<T, MLambda>) {
          return m_lambda(n.param, map_holes(n.body, fill, count));
        } else if constexpr (std::is_same_v<T, MApply>) {
          return m_apply(map_holes(n.fn, fill, count), map_holes(n.arg, fill, count));
        } else if constexpr (std::is_same_v<T, MFix>) {
          return m_fix(map_holes(n.fn, fill, count));
        } else if constexpr (std::is_same_v<T, MIf>) {
          return m_if(map_holes(n.cond, fill, count),
                      map_holes(n.then_branch, fill, count),
                      map_holes(n.else_branch, fill, count));
        } else if constexpr (std::is_same_v<T, MBinPrim>) {
          return m_bin(n.op, map_holes(n.lhs, fill, count), map_holes(n.rhs, fill, count));
        } else if constexpr (std::is_same_v<T, MCons>) {
          return m_cons(map_holes(n.head, fill, count), map_holes(n.tail, fill, count));
        } else if constexpr (std::is_same_v<T, MHead>) {
          return m_head(map_holes(n.arg, fill, count));
        } else if constexpr (std::is_same_v<T, MTail>) {
          return m_tail(map_holes(n.arg, fill, count));
        } else {
          return e;
        }
      },
      e->node);
}

} // namespace

std::size_t hole_count(const HostProgram& p) {
  std::size_t count = 0;
  map_holes(p.emit_arg, [] { return m_hole(); }, count);
  return count;
}

HostProgram apply_program(const HostProgram& p, const MetaPtr& f) {
  std::size_t count = 0;
  MetaPtr out = map_holes(p.emit_arg, [&] { return m_apply(f, m_hole()); }, count);
  if (count == 0)
    throw std::invalid_argument("apply_program: program has no code argument position");
  return HostProgram{std::move(out)};
}

HostProgram instantiate(const HostProgram& p, const MetaPtr& arg) {
  std::size_t count = 0;
  return HostProgram{map_holes(p.emit_arg, [&] { return arg; }, count)};
}

// ---------------------------------------------------------------------------
// S-expression surface syntax

namespace {

struct SexprToken {
  enum class Kind { LParen, RParen, String, Symbol, Int, End };
  Kind kind;
  std::string text;
  std::int64_t int_value = 0;
  int line = 1, column = 1;
};

class SexprLexer {
public:
  explicit SexprLexer(const std::string& text) : text_(text) { advance(); }

  const SexprToken& peek() const { return current_; }
  SexprToken next() {
    SexprToken t = current_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      bump();
    current_ = SexprToken{SexprToken::Kind::End, "", 0, line_, column_};
    if (pos_ >= text_.size()) return;
    current_.line = line_;
    current_.column = column_;
    char c = text_[pos_];
    if (c == '(') {
      bump();
      current_.kind = SexprToken::Kind::LParen;
      return;
    }
    if (c == ')') {
      bump();
      current_.kind = SexprToken::Kind::RParen;
      return;
    }
    if (c == '"') {
      bump();
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        char ch = text_[pos_];
        if (ch == '\\') {
          bump();
          if (pos_ >= text_.size())
            throw ParseError("unterminated escape in string", line_, column_);
          char esc = text_[pos_];
          switch (esc) {
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            case '"': s += '"'; break;
            case '\\': s += '\\'; break;
            default:
              throw ParseError(std::string("unknown string escape '\\") + esc + "'",
                               line_, column_);
          }
          bump();
        } else {
          s += ch;
          bump();
        }
      }
      if (pos_ >= text_.size())
        throw ParseError("unterminated string literal", current_.line, current_.column);
      bump(); // closing quote
      current_.kind = SexprToken::Kind::String;
      current_.text = std::move(s);
      return;
    }
    std::string sym;
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == '(' || ch == ')' ||
          ch == '"')
        break;
      sym += ch;
      bump();
    }
    bool numeric = !sym.empty() && (std::isdigit(static_cast<unsigned char>(sym[0])) ||
                                    (sym[0] == '-' && sym.size() > 1));
    if (numeric) {
      try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(sym, &used);
        if (used == sym.size()) {
          current_.kind = SexprToken::Kind::Int;
          current_.int_value = v;
          return;
        }
      } catch (const std::exception&) {
        // fall through to symbol
      }
    }
    current_.kind = SexprToken::Kind::Symbol;
    current_.text = std::move(sym);
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
  SexprToken current_;
};

class SexprParser {
public:
  explicit SexprParser(const std::string& text) : lex_(text) {}

  MetaPtr parse_expr_top() {
    MetaPtr e = expr();
    const SexprToken& t = lex_.peek();
    if (t.kind != SexprToken::Kind::End)
      throw ParseError("unexpected trailing input", t.line, t.column);
    return e;
  }

  HostProgram parse_program() {
    SexprToken open = lex_.next();
    if (open.kind != SexprToken::Kind::LParen)
      throw ParseError("expected '(emit ...)'", open.line, open.column);
    SexprToken head = lex_.next();
    if (head.kind != SexprToken::Kind::Symbol || head.text != "emit")
      throw ParseError("a host program must start with (emit ...)", head.line, head.column);
    MetaPtr arg = expr();
    expect_rparen();
    const SexprToken& t = lex_.peek();
    if (t.kind != SexprToken::Kind::End)
      throw ParseError("unexpected trailing input", t.line, t.column);
    return HostProgram{std::move(arg)};
  }

private:
  MetaPtr expr() {
    SexprToken t = lex_.next();
    switch (t.kind) {
      case SexprToken::Kind::Int:
        return m_int(t.int_value);
      case SexprToken::Kind::Symbol:
        return atom(t);
      case SexprToken::Kind::LParen:
        return list(t);
      case SexprToken::Kind::String:
        throw ParseError("string literal outside quoteA/quoteM", t.line, t.column);
      default:
        throw ParseError("expected an expression", t.line, t.column);
    }
  }

  MetaPtr atom(const SexprToken& t) {
    const std::string& s = t.text;
    if (s == "true") return m_bool(true);
    if (s == "false") return m_bool(false);
    if (s == "nil") return m_nil();
    if (s == "_") return m_hole();
    if (s == "compile_a" || s == "compile_a_safe" || s == "typecheck_a" ||
        s == "fold_consts")
      return m_prim(s);
    return m_var(s);
  }

  MetaPtr list(const SexprToken& open) {
    SexprToken head = lex_.next();
    if (head.kind == SexprToken::Kind::RParen)
      throw ParseError("empty list form", open.line, open.column);

    if (head.kind == SexprToken::Kind::Symbol) {
      const std::string& s = head.text;
      if (s == "lambda") {
        SexprToken po = lex_.next();
        if (po.kind != SexprToken::Kind::LParen)
          throw ParseError("expected parameter list after lambda", po.line, po.column);
        SexprToken param = lex_.next();
        if (param.kind != SexprToken::Kind::Symbol)
          throw ParseError("expected parameter name", param.line, param.column);
        expect_rparen();
        MetaPtr body = expr();
        expect_rparen();
        return m_lambda(param.text, std::move(body));
      }
      if (s == "fix") {
        MetaPtr f = expr();
        expect_rparen();
        return m_fix(std::move(f));
      }
      if (s == "if") {
        MetaPtr c = expr();
        MetaPtr th = expr();
        MetaPtr el = expr();
        expect_rparen();
        return m_if(std::move(c), std::move(th), std::move(el));
      }
      if (s == "+" || s == "-" || s == "*" || s == "<" || s == "=") {
        MetaPtr l = expr();
        MetaPtr r = expr();
        expect_rparen();
        return m_bin(s[0], std::move(l), std::move(r));
      }
      if (s == "quoteA") {
        SexprToken str = lex_.next();
        if (str.kind != SexprToken::Kind::String)
          throw ParseError("quoteA expects a string literal", str.line, str.column);
        expect_rparen();
        return m_quote_a(parse_source(str.text));
      }
      if (s == "quoteM") {
        SexprToken str = lex_.next();
        if (str.kind != SexprToken::Kind::String)
          throw ParseError("quoteM expects a string literal", str.line, str.column);
        expect_rparen();
        return m_quote_m(parse_machine(str.text));
      }
      if (s == "cons") {
        MetaPtr h = expr();
        MetaPtr tl = expr();
        expect_rparen();
        return m_cons(std::move(h), std::move(tl));
      }
      if (s == "head" || s == "tail") {
        MetaPtr a = expr();
        expect_rparen();
        return s == "head" ? m_head(std::move(a)) : m_tail(std::move(a));
      }
      if (s == "emit")
        throw ParseError("emit may appear only at the top level", head.line, head.column);
      // plain application with a symbol head
      MetaPtr fn = atom(head);
      return application(std::move(fn));
    }

    // application with a computed head
    MetaPtr fn;
    if (head.kind == SexprToken::Kind::Int) fn = m_int(head.int_value);
    else if (head.kind == SexprToken::Kind::LParen) fn = list(head);
    else throw ParseError("expected an expression", head.line, head.column);
    return application(std::move(fn));
  }

  // (f a b ...) applies left to right
  MetaPtr application(MetaPtr fn) {
    bool any = false;
    while (lex_.peek().kind != SexprToken::Kind::RParen) {
      if (lex_.peek().kind == SexprToken::Kind::End) {
        const SexprToken& t = lex_.peek();
        throw ParseError("unterminated list", t.line, t.column);
      }
      fn = m_apply(std::move(fn), expr());
      any = true;
    }
    lex_.next(); // ')'
    if (!any)
      return fn; // (f) is just f
    return fn;
  }

  void expect_rparen() {
    SexprToken t = lex_.next();
    if (t.kind != SexprToken::Kind::RParen)
      throw ParseError("expected ')'", t.line, t.column);
  }

  SexprLexer lex_;
};

std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string strip_trailing_newline(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

void print_meta(std::ostream& out, const MetaPtr& e) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, MIntLit>) out << n.value;
        else if constexpr (std::is_same_v<T, MBoolLit>) out << (n.value ? "true" : "false");
        else if constexpr (std::is_same_v<T, MVarRef>) out << n.name;
        else if constexpr (std::is_same_v<T, MPrimRef>) out << n.name;
        else if constexpr (std::is_same_v<T, MLambda>) {
          out << "(lambda (" << n.param << ") ";
          print_meta(out, n.body);
          out << ')';
        } else if constexpr (std::is_same_v<T, MApply>) {
          out << '(';
          print_meta(out, n.fn);
          out << ' ';
          print_meta(out, n.arg);
          out << ')';
        } else if constexpr (std::is_same_v<T, MFix>) {
          out << "(fix ";
          print_meta(out, n.fn);
          out << ')';
        } else if constexpr (std::is_same_v<T, MIf>) {
          out << "(if ";
          print_meta(out, n.cond);
          out << ' ';
          print_meta(out, n.then_branch);
          out << ' ';
          print_meta(out, n.else_branch);
          out << ')';
        } else if constexpr (std::is_same_v<T, MBinPrim>) {
          out << '(' << n.op << ' ';
          print_meta(out, n.lhs);
          out << ' ';
          print_meta(out, n.rhs);
          out << ')';
        } else if constexpr (std::is_same_v<T, MQuoteA>) {
          out << "(quoteA " << escape_string(format_source(n.term)) << ')';
        } else if constexpr (std::is_same_v<T, MQuoteM>) {
          out << "(quoteM " << escape_string(strip_trailing_newline(format_machine(n.code)))
              << ')';
        } else if constexpr (std::is_same_v<T, MNil>) {
          out << "nil";
        } else if constexpr (std::is_same_v<T, MCons>) {
          out << "(cons ";
          print_meta(out, n.head);
          out << ' ';
          print_meta(out, n.tail);
          out << ')';
        } else if constexpr (std::is_same_v<T, MHead>) {
          out << "(head ";
          print_meta(out, n.arg);
          out << ')';
        } else if constexpr (std::is_same_v<T, MTail>) {
          out << "(tail ";
          print_meta(out, n.arg);
          out << ')';
        } else {
          out << '_';
        }
      },
      e->node);
}

} // namespace

HostProgram parse_host(const std::string& text) {
  return SexprParser(text).parse_program();
}

MetaPtr parse_meta(const std::string& text) { return SexprParser(text).parse_expr_top(); }

std::string format_host(const HostProgram& p) {
  std::ostringstream out;
  out << "(emit ";
  print_meta(out, p.emit_arg);
  out << ')';
  return out.str();
}

std::string format_meta(const MetaPtr& e) {
  std::ostringstream out;
  print_meta(out, e);
  return out.str();
}

} // namespace stagelab
