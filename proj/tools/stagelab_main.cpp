// Command-line surface for the staged-language laboratory: compile any of
// the three languages, build embeddings, run machine code, partition
// corpora by compiled output, and run the checker suites.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stagelab/embedding.hpp"
#include "stagelab/generator.hpp"
#include "stagelab/kernel.hpp"

namespace {

using namespace stagelab;

// Exit statuses: 0 code, 1 check failure, 2 unsafe, 3 bottom, 4 error/trap,
// 5 parse failure.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUnsafe = 2;
constexpr int kExitBottom = 3;
constexpr int kExitError = 4;
constexpr int kExitParse = 5;

struct GlobalOptions {
  std::int64_t fuel = kDefaultFuel;
  std::uint64_t seed = 0;
  std::string suite_path;
  std::string format = "text";
};

std::string read_input(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) {
    std::ifstream in(arg);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return arg;
}

std::vector<Env> load_suite_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suite file: " + path);
  std::vector<Env> suite;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    Env env;
    std::istringstream ls(line);
    std::string binding;
    while (ls >> binding) {
      auto eq = binding.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("malformed suite binding '" + binding + "'");
      env.bindings[binding.substr(0, eq)] = std::stoll(binding.substr(eq + 1));
    }
    suite.push_back(std::move(env));
  }
  return suite;
}

int outcome_exit(const CompiledProgram& p) {
  if (p.is_code()) return kExitOk;
  if (p.is_unsafe()) return kExitUnsafe;
  if (p.is_bottom()) return kExitBottom;
  return kExitError;
}

void print_compiled(const CompiledProgram& p, const std::string& format) {
  if (format == "json") {
    nlohmann::json j;
    j["outcome"] = outcome_kind(p);
    if (auto* code = p.code()) j["code"] = format_machine(*code);
    if (auto* msg = p.error_message()) j["message"] = *msg;
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::string s = format_compiled(p);
  std::cout << s;
  if (s.empty() || s.back() != '\n') std::cout << '\n';
}

// Independent constant folder used as the realizability oracle; kept
// apart from the host primitive on purpose.
TermPtr oracle_fold(const TermPtr& t) {
  auto lit_of = [](const TermPtr& x) { return std::get_if<Lit>(&x->node); };
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinOp>) {
          TermPtr l = oracle_fold(n.lhs), r = oracle_fold(n.rhs);
          if (auto* a = lit_of(l)) {
            if (auto* b = lit_of(r)) {
              std::int64_t v = n.op == BinKind::Add   ? a->value + b->value
                               : n.op == BinKind::Sub ? a->value - b->value
                                                      : a->value * b->value;
              return make_lit(v);
            }
          }
          return make_bin(n.op, l, r);
        } else if constexpr (std::is_same_v<T, Cmp>) {
          TermPtr l = oracle_fold(n.lhs), r = oracle_fold(n.rhs);
          if (auto* a = lit_of(l)) {
            if (auto* b = lit_of(r))
              return make_bool(n.op == CmpKind::Lt ? a->value < b->value
                                                   : a->value == b->value);
          }
          return make_cmp(n.op, l, r);
        } else if constexpr (std::is_same_v<T, IfTerm>) {
          TermPtr c = oracle_fold(n.cond);
          if (auto* b = std::get_if<BoolLit>(&c->node))
            return oracle_fold(b->value ? n.then_branch : n.else_branch);
          return make_if(c, oracle_fold(n.then_branch), oracle_fold(n.else_branch));
        } else if constexpr (std::is_same_v<T, Escape>) {
          return make_escape(oracle_fold(n.body));
        } else {
          return t;
        }
      },
      t->node);
}

std::vector<TermPtr> corpus_terms(const std::string& corpus_path, std::size_t generate,
                                  const std::string& suite_name,
                                  const GlobalOptions& opts) {
  if (!corpus_path.empty()) {
    std::vector<TermPtr> terms;
    for (const std::string& text : load_corpus_file(corpus_path))
      terms.push_back(parse_source(text)); // ParseError propagates
    return terms;
  }
  std::size_t n = generate ? generate : 1000;
  TermGen gen(opts.seed);
  if (suite_name == "safety") return gen.safety_corpus(n, 6);
  return gen.corpus(n, 6, /*inject_duplicates=*/true);
}

int run_checks(const std::string& suite_name, const std::string& corpus_path,
               std::size_t generate, const GlobalOptions& opts) {
  bool all = suite_name == "all";
  nlohmann::json out;
  std::ostringstream text;
  bool ok = true;

  std::vector<Env> suite_storage;
  const std::vector<Env>* suite = nullptr;
  if (!opts.suite_path.empty()) {
    suite_storage = load_suite_file(opts.suite_path);
    suite = &suite_storage;
  }

  if (all || suite_name == "semantics") {
    auto terms = corpus_terms(corpus_path, generate, "semantics", opts);
    EmbeddingReport r = check_semantics_preserving(embed_stage, terms, suite, opts.fuel);
    ok = ok && r.ok();
    out["semantics"] = report_to_json(r);
    text << "== semantics ==\n" << report_to_text(r);
  }
  if (all || suite_name == "stage") {
    auto terms = corpus_terms(corpus_path, generate, "stage", opts);
    EmbeddingReport r = check_stage_preserving(embed_stage, terms, opts.fuel);
    ok = ok && r.ok();
    out["stage"] = report_to_json(r);
    text << "== stage ==\n" << report_to_text(r);
  }
  if (all || suite_name == "safety") {
    auto terms = corpus_terms(corpus_path, generate, "safety", opts);
    EmbeddingReport r = check_safety_preserving(terms, opts.fuel);
    ok = ok && r.ok();
    out["safety"] = report_to_json(r);
    text << "== safety ==\n" << report_to_text(r);
  }
  if (all || suite_name == "realizable") {
    auto terms = corpus_terms(corpus_path, generate ? generate : 100, "realizable", opts);
    if (terms.size() > 200) terms.resize(200);
    std::vector<ValuePtr> samples;
    for (const TermPtr& t : terms) samples.push_back(encode_source(t));

    // constant folder against the independent oracle above
    HostProgram fold_template = HostProgram{m_apply(m_prim("compile_a"), m_hole())};
    RealizabilityReport rf = check_realizable(
        m_prim("fold_consts"),
        [](const ValuePtr& x) -> std::optional<ValuePtr> {
          const TermPtr* p = decode_source(x);
          if (!p) return std::nullopt;
          return encode_source(oracle_fold(*p));
        },
        samples, fold_template, opts.fuel);

    // the source compiler itself, with the interpreter as the program
    HostProgram interp_template = HostProgram{m_hole()};
    std::int64_t fuel = opts.fuel;
    RealizabilityReport rc = check_realizable(
        m_prim("compile_a"),
        [fuel](const ValuePtr& x) -> std::optional<ValuePtr> {
          const TermPtr* p = decode_source(x);
          if (!p) return std::nullopt;
          CompiledProgram out = compile_a(*p, fuel);
          if (auto* code = out.code()) return encode_machine(*code);
          return std::nullopt;
        },
        samples, interp_template, opts.fuel);

    ok = ok && rf.ok() && rc.ok();
    out["realizable"] = {{"fold_consts", realizability_to_json(rf)},
                         {"compile_a", realizability_to_json(rc)}};
    auto summary = [&](const char* name, const RealizabilityReport& r) {
      text << "== realizable (" << name << ") ==\n"
           << r.pass << " pass, " << r.fail << " fail, " << r.skipped << " skipped\n";
      for (const auto& f : r.failures)
        text << "FAIL [" << f.kind << "] " << f.witness << ": " << f.detail << '\n';
      text << (r.ok() ? "OK" : "FAILED") << '\n';
    };
    summary("fold_consts", rf);
    summary("compile_a", rc);
  }

  if (opts.format == "json")
    std::cout << out.dump(2) << '\n';
  else
    std::cout << text.str();
  return ok ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"staged-language laboratory"};
  app.require_subcommand(1);
  app.fallthrough(); // global flags may follow the subcommand

  GlobalOptions opts;
  app.add_option("--fuel", opts.fuel, "evaluation step budget")->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "generator seed");
  app.add_option("--suite", opts.suite_path, "input suite file (lines of name=value)");
  app.add_option("--format", opts.format, "output format")
      ->check(CLI::IsMember({"text", "json"}));

  // compile
  std::string compile_lang, compile_input;
  auto* cmd_compile = app.add_subcommand("compile", "compile a program");
  cmd_compile->add_option("lang", compile_lang, "language")
      ->required()
      ->check(CLI::IsMember({"a", "a-safe", "u"}));
  cmd_compile->add_option("input", compile_input, "program text or file path")->required();

  // embed
  std::string embed_variant, embed_input;
  bool embed_compile = false;
  auto* cmd_embed = app.add_subcommand("embed", "embed a source program into the host");
  cmd_embed->add_option("variant", embed_variant, "embedding variant")
      ->required()
      ->check(CLI::IsMember({"stage", "safe"}));
  cmd_embed->add_option("input", embed_input, "program text or file path")->required();
  cmd_embed->add_flag("--compile", embed_compile, "also compile the embedded program");

  // run
  std::string run_input;
  std::vector<std::string> run_vars;
  auto* cmd_run = app.add_subcommand("run", "execute machine code");
  cmd_run->add_option("input", run_input, "machine code text or file path")->required();
  cmd_run->add_option("--var", run_vars, "input binding name=value");

  // kernel
  std::string kernel_corpus, kernel_compiler;
  auto* cmd_kernel = app.add_subcommand("kernel", "partition a corpus by compiled output");
  cmd_kernel->add_option("corpus", kernel_corpus, "corpus file")->required();
  cmd_kernel->add_option("compiler", kernel_compiler, "compiler")
      ->required()
      ->check(CLI::IsMember({"a", "a-safe", "u-embed"}));

  // check
  std::string check_suite, check_corpus;
  std::size_t check_generate = 0;
  auto* cmd_check = app.add_subcommand("check", "run a checker suite");
  cmd_check->add_option("suite", check_suite, "which checks to run")
      ->required()
      ->check(CLI::IsMember({"semantics", "stage", "safety", "realizable", "all"}));
  cmd_check->add_option("corpus", check_corpus, "corpus file");
  cmd_check->add_option("--generate", check_generate, "generate a corpus of this size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_compile->parsed()) {
      std::string text = read_input(compile_input);
      CompiledProgram result;
      try {
        if (compile_lang == "u") {
          result = compile_u(parse_host(text), opts.fuel);
        } else {
          TermPtr p = parse_source(text);
          result = compile_lang == "a" ? compile_a(p, opts.fuel)
                                       : compile_a_safe(p, opts.fuel);
        }
      } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
      }
      print_compiled(result, opts.format);
      return outcome_exit(result);
    }

    if (cmd_embed->parsed()) {
      TermPtr p;
      try {
        p = parse_source(read_input(embed_input));
      } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
      }
      if (!escapes_closed(p)) {
        std::cerr << "not a language member: open escape body\n";
        return kExitParse;
      }
      HostProgram host = embed_variant == "stage" ? embed_stage(p) : embed_safe(p);
      if (opts.format == "json") {
        nlohmann::json j;
        j["host_program"] = format_host(host);
        if (embed_compile) {
          CompiledProgram result = compile_u(host, opts.fuel);
          j["outcome"] = outcome_kind(result);
          if (auto* code = result.code()) j["code"] = format_machine(*code);
          if (auto* msg = result.error_message()) j["message"] = *msg;
          std::cout << j.dump(2) << '\n';
          return outcome_exit(result);
        }
        std::cout << j.dump(2) << '\n';
        return kExitOk;
      }
      std::cout << format_host(host) << '\n';
      if (embed_compile) {
        CompiledProgram result = compile_u(host, opts.fuel);
        print_compiled(result, opts.format);
        return outcome_exit(result);
      }
      return kExitOk;
    }

    if (cmd_run->parsed()) {
      MachineCode code;
      try {
        code = parse_machine(read_input(run_input));
      } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
      }
      Env env;
      for (const std::string& binding : run_vars) {
        auto eq = binding.find('=');
        if (eq == std::string::npos) {
          std::cerr << "malformed --var binding '" << binding << "'\n";
          return kExitParse;
        }
        env.bindings[binding.substr(0, eq)] = std::stoll(binding.substr(eq + 1));
      }
      RunResult r = run_machine(code, env, opts.fuel);
      switch (r.kind) {
        case RunResult::Kind::Value:
          std::cout << r.value << '\n';
          return kExitOk;
        case RunResult::Kind::Trapped:
          std::cout << "TRAP\n";
          return kExitError;
        default:
          std::cout << "FUEL\n";
          return kExitBottom;
      }
    }

    if (cmd_kernel->parsed()) {
      KernelPartition partition =
          kernel_classes(load_corpus_file(kernel_corpus),
                         compiler_kind_from_name(kernel_compiler), opts.fuel);
      if (opts.format == "json")
        std::cout << partition_to_json(partition).dump(2) << '\n';
      else
        std::cout << partition_to_text(partition);
      return kExitOk;
    }

    if (cmd_check->parsed()) {
      try {
        return run_checks(check_suite, check_corpus, check_generate, opts);
      } catch (const ParseError& e) {
        std::cerr << "corpus parse error: " << e.what() << '\n';
        return kExitParse;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}
