#include <doctest.h>

#include <set>

#include "stagelab/generator.hpp"
#include "stagelab/host.hpp"

using namespace stagelab;

TEST_CASE("code round trips") {
  TermPtr p = make_lit(2);
  ValuePtr ps = encode_source(p);
  const TermPtr* back = decode_source(ps);
  REQUIRE(back);
  CHECK(term_equal(*back, p));

  MachineCode m{{{Op::Iadd}}};
  ValuePtr ms = encode_machine(m);
  const MachineCode* mb = decode_machine(ms);
  REQUIRE(mb);
  CHECK(*mb == m);

  CHECK(decode_machine(ps) == nullptr);
}

TEST_CASE("coding is injective over a generated corpus") {
  // canonical serializations must collide only for equal terms
  TermGen gen(404);
  std::set<std::string> seen;
  std::vector<TermPtr> terms;
  std::size_t distinct = 0;
  for (int i = 0; i < 10000; ++i) {
    TermPtr t = gen.typed_term(i % 3 == 0 ? SType::Bool : SType::Int, 5);
    std::string key = canonical_code(encode_source(t));
    if (seen.insert(key).second) {
      for (const TermPtr& other : terms)
        CHECK_FALSE(term_equal(other, t));
      if (terms.size() < 64) terms.push_back(t); // bounded cross-check
      ++distinct;
    }
  }
  CHECK(distinct > 1000);
}

TEST_CASE("beta reduction") {
  MetaResult r = meta_eval(m_apply(m_lambda("x", m_bin('+', m_var("x"), m_int(1))),
                                   m_int(41)),
                           1000);
  REQUIRE(std::holds_alternative<ValuePtr>(r));
  auto* v = std::get_if<VInt>(&std::get<ValuePtr>(r)->v);
  REQUIRE(v);
  CHECK(v->value == 42);
}

TEST_CASE("compile_a as a primitive respects kernel classes") {
  MetaResult a = meta_eval(m_apply(m_prim("compile_a"),
                                   m_quote_a(parse_source("x + ~(1+1)"))),
                           kDefaultFuel);
  MetaResult b = meta_eval(m_apply(m_prim("compile_a"), m_quote_a(parse_source("x + 2"))),
                           kDefaultFuel);
  REQUIRE(std::holds_alternative<ValuePtr>(a));
  REQUIRE(std::holds_alternative<ValuePtr>(b));
  const MachineCode* ma = decode_machine(std::get<ValuePtr>(a));
  const MachineCode* mb = decode_machine(std::get<ValuePtr>(b));
  REQUIRE(ma);
  REQUIRE(mb);
  CHECK(*ma == *mb);
}

TEST_CASE("divergence exhausts fuel at any bound") {
  MetaPtr loop = m_apply(m_fix(m_lambda("f", m_lambda("x", m_apply(m_var("f"),
                                                                   m_var("x"))))),
                         m_int(0));
  for (std::int64_t fuel : {10, 1000, 100000})
    CHECK(std::holds_alternative<MetaFuelExhausted>(meta_eval(loop, fuel)));
}

TEST_CASE("fix computes recursive functions") {
  // factorial via fix
  MetaPtr fac = m_fix(m_lambda(
      "self",
      m_lambda("n", m_if(m_bin('=', m_var("n"), m_int(0)), m_int(1),
                         m_bin('*', m_var("n"),
                               m_apply(m_var("self"),
                                       m_bin('-', m_var("n"), m_int(1))))))));
  MetaResult r = meta_eval(m_apply(fac, m_int(6)), 10000);
  REQUIRE(std::holds_alternative<ValuePtr>(r));
  auto* v = std::get_if<VInt>(&std::get<ValuePtr>(r)->v);
  REQUIRE(v);
  CHECK(v->value == 720);
}

TEST_CASE("meta errors") {
  CHECK(std::holds_alternative<MetaError>(meta_eval(m_apply(m_int(1), m_int(2)), 100)));
  CHECK(std::holds_alternative<MetaError>(meta_eval(m_var("nope"), 100)));
  CHECK(std::holds_alternative<MetaError>(
      meta_eval(m_bin('+', m_int(1), m_bool(true)), 100)));
  CHECK(std::holds_alternative<MetaError>(meta_eval(m_head(m_nil()), 100)));
  CHECK(std::holds_alternative<MetaError>(meta_eval(m_hole(), 100)));
  CHECK(std::holds_alternative<MetaError>(meta_eval(m_prim("no_such_prim"), 100)));
}

TEST_CASE("lists") {
  MetaPtr list = m_cons(m_int(1), m_cons(m_int(2), m_nil()));
  MetaResult h = meta_eval(m_head(list), 100);
  REQUIRE(std::holds_alternative<ValuePtr>(h));
  CHECK(std::get_if<VInt>(&std::get<ValuePtr>(h)->v)->value == 1);
  MetaResult t = meta_eval(m_head(m_tail(list)), 100);
  REQUIRE(std::holds_alternative<ValuePtr>(t));
  CHECK(std::get_if<VInt>(&std::get<ValuePtr>(t)->v)->value == 2);
}

TEST_CASE("compile_u outcome mapping") {
  CHECK(compile_u(HostProgram{m_quote_m(MachineCode{{pushi(2)}})}) ==
        compiled_code(MachineCode{{pushi(2)}}));
  CHECK(compile_u(HostProgram{m_apply(m_prim("compile_a_safe"),
                                      m_quote_a(parse_source("1 + true")))})
            .is_unsafe());
  CHECK(compile_u(HostProgram{m_apply(m_fix(m_lambda(
                                          "f", m_lambda("x", m_apply(m_var("f"),
                                                                     m_var("x"))))),
                                      m_int(0))},
                  1000)
            .is_bottom());
  CHECK(compile_u(HostProgram{m_int(3)}).is_error()); // not code
  CHECK(compile_u(HostProgram{m_var("free")}).is_error());
}

TEST_CASE("compile_u agrees with the source compiler through the primitive") {
  TermPtr p = parse_source("x + 2");
  CompiledProgram via_host =
      compile_u(HostProgram{m_apply(m_prim("compile_a"), m_quote_a(p))});
  CHECK(via_host == compile_a(p));
}

TEST_CASE("compile_u fuel monotonicity") {
  std::vector<HostProgram> programs{
      HostProgram{m_quote_m(MachineCode{{pushi(1)}})},
      HostProgram{m_apply(m_prim("compile_a"), m_quote_a(parse_source("x * ~(2+2)")))},
      HostProgram{m_apply(m_prim("compile_a_safe"), m_quote_a(parse_source("1 + true")))},
      HostProgram{m_int(9)},
  };
  for (const HostProgram& p : programs) {
    CompiledProgram at1k = compile_u(p, 1000);
    if (at1k.is_bottom()) continue;
    CHECK(compile_u(p, 10000) == at1k);
    CHECK(compile_u(p, 100000) == at1k);
  }
}

TEST_CASE("interpreter equation, structurally") {
  MachineCode m = parse_machine("LOADV x\nPUSHI 2\nIADD");
  CHECK(compile_u(interp_program(m_quote_m(m))) == compiled_code(m));
  CHECK(compile_u(interp_program(m_quote_m(MachineCode{}))) ==
        compiled_code(MachineCode{}));

  TermGen gen(606);
  for (int i = 0; i < 100; ++i) {
    MachineCode code = gen.machine_program(10);
    CHECK(compile_u(interp_program(m_quote_m(code))) == compiled_code(code));
  }
}

TEST_CASE("program composition") {
  HostProgram interp{m_hole()};
  CHECK(hole_count(interp) == 1);

  // P = I_M, F = compile_a: the composed program at <p_a> compiles to
  // the source compilation of p_a.
  HostProgram composed = apply_program(interp, m_prim("compile_a"));
  TermPtr p = parse_source("x + ~(1+1)");
  CHECK(compile_u(instantiate(composed, m_quote_a(p))) == compile_a(p));

  // identity function composes invisibly
  MetaPtr identity = m_lambda("c", m_var("c"));
  HostProgram with_id = apply_program(interp, identity);
  MachineCode m = parse_machine("PUSHI 7");
  CHECK(compile_u(instantiate(with_id, m_quote_m(m))) ==
        compile_u(instantiate(interp, m_quote_m(m))));

  CHECK_THROWS_AS(apply_program(HostProgram{m_int(1)}, identity),
                  std::invalid_argument);
}

TEST_CASE("composed functions equal nested application on samples") {
  // F = G o H with G = fold_consts, H = identity, against nesting by hand
  MetaPtr g = m_prim("fold_consts");
  MetaPtr h = m_lambda("c", m_var("c"));
  MetaPtr composed = m_lambda("c", m_apply(g, m_apply(h, m_var("c"))));

  TermGen gen(17);
  HostProgram pipeline{m_apply(m_prim("compile_a"), m_hole())};
  for (int i = 0; i < 40; ++i) {
    TermPtr t = gen.typed_term(SType::Int, 5);
    CompiledProgram a =
        compile_u(instantiate(apply_program(pipeline, composed), m_quote_a(t)));
    CompiledProgram b = compile_u(
        instantiate(HostProgram{m_apply(m_prim("compile_a"),
                                        m_apply(g, m_apply(h, m_hole())))},
                    m_quote_a(t)));
    CHECK(a == b);
  }
}

TEST_CASE("surface syntax") {
  HostProgram p = parse_host("(emit (compile_a (quoteA \"x + ~(1+1)\")))");
  CHECK(compile_u(p) == compile_a(parse_source("x + 2")));

  HostProgram q = parse_host("(emit (quoteM \"PUSHI 2\\nIADD\"))");
  CHECK(compile_u(q) == compiled_code(parse_machine("PUSHI 2\nIADD")));

  CHECK_THROWS_AS(parse_host("(compile_a (quoteA \"x\"))"), ParseError); // no emit
  CHECK_THROWS_AS(parse_host("(emit (quoteA"), ParseError);
  CHECK_THROWS_AS(parse_host("(emit (emit (quoteM \"TRAP\")))"), ParseError);
}

TEST_CASE("surface syntax round trip") {
  std::vector<std::string> programs{
      "(emit (compile_a (quoteA \"x + 2\")))",
      "(emit ((lambda (c) (compile_a c)) (quoteA \"if x < 1 then 0 else 1\")))",
      "(emit ((fix (lambda (f) (lambda (n) (if (= n 0) (quoteM \"PUSHI 1\") (f (- n 1)))))) 3))",
      "(emit (quoteM \"LOADV x\\nPUSHI 2\\nIADD\"))",
  };
  for (const std::string& text : programs) {
    HostProgram p = parse_host(text);
    HostProgram q = parse_host(format_host(p));
    CHECK(meta_equal(p.emit_arg, q.emit_arg));
    CHECK(compile_u(p) == compile_u(q));
  }
}

TEST_CASE("compile_u determinism") {
  HostProgram p = parse_host("(emit (compile_a (fold_consts (quoteA \"x + (1 + 2 * 3)\"))))");
  CompiledProgram first = compile_u(p);
  REQUIRE(first.is_code());
  CHECK(*first.code() == parse_machine("LOADV x\nPUSHI 7\nIADD"));
  for (int i = 0; i < 5; ++i) CHECK(compile_u(p) == first);
}
