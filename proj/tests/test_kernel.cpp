#include <doctest.h>

#include <algorithm>
#include <map>

#include "oracles.hpp"
#include "stagelab/generator.hpp"
#include "stagelab/kernel.hpp"

using namespace stagelab;

namespace {

const std::vector<std::string> kGolden{
    "x + 2", "x + ~(1+1)", "x + ~(1+(2-1))", "y + 2", "y + ~(4-2)",
};

// class index of each corpus member, for comparing partitions as
// equivalence relations
std::map<std::string, std::size_t> class_index(const KernelPartition& p) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < p.classes.size(); ++i)
    for (const std::string& m : p.classes[i].members) out.emplace(m, i);
  return out;
}

} // namespace

TEST_CASE("the golden corpus splits into its two classes") {
  KernelPartition p = kernel_classes(kGolden, CompilerKind::PlainA, kDefaultFuel);
  REQUIRE(p.classes.size() == 2);
  CHECK(p.unmapped.empty());
  CHECK(p.classes[0].members ==
        std::vector<std::string>{"x + 2", "x + ~(1+1)", "x + ~(1+(2-1))"});
  CHECK(p.classes[1].members == std::vector<std::string>{"y + 2", "y + ~(4-2)"});
  REQUIRE(p.classes[0].representative.is_code());
  CHECK(*p.classes[0].representative.code() ==
        parse_machine("LOADV x\nPUSHI 2\nIADD"));
}

TEST_CASE("corpus loading") {
  std::vector<std::string> c =
      load_corpus_text("# comment\n  x + 1  \n\ny * 2\n# tail\n");
  CHECK(c == std::vector<std::string>{"x + 1", "y * 2"});
}

TEST_CASE("degenerate partitions") {
  CHECK(kernel_classes({}, CompilerKind::PlainA, kDefaultFuel).classes.empty());

  KernelPartition single = kernel_classes({"x + 1"}, CompilerKind::PlainA, kDefaultFuel);
  REQUIRE(single.classes.size() == 1);
  CHECK(single.classes[0].members.size() == 1);

  // distinct variables are never merged
  KernelPartition vars =
      kernel_classes({"x", "y", "z", "a", "b"}, CompilerKind::PlainA, kDefaultFuel);
  CHECK(vars.classes.size() == 5);
}

TEST_CASE("unmapped members are kept out of classes") {
  KernelPartition p = kernel_classes({"x + 1", "x + ", "~(x) + 1"},
                                     CompilerKind::PlainA, kDefaultFuel);
  CHECK(p.classes.size() == 1);
  REQUIRE(p.unmapped.size() == 2); // parse failure and open escape
}

TEST_CASE("a partition is an equivalence relation") {
  TermGen gen(55);
  std::vector<std::string> corpus;
  for (const TermPtr& t : gen.corpus(80, 5, /*inject_duplicates=*/true))
    corpus.push_back(format_source(t));
  KernelPartition p = kernel_classes(corpus, CompilerKind::PlainA, kDefaultFuel);

  Pipeline compile = pipeline_for(CompilerKind::PlainA, kDefaultFuel);
  // classes are exactly the fibers of the compiler: two members share a
  // class iff their compilations are structurally equal
  std::map<std::string, std::size_t> idx = class_index(p);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      auto a = idx.find(corpus[i]);
      auto b = idx.find(corpus[j]);
      if (a == idx.end() || b == idx.end()) continue;
      bool same_class = a->second == b->second;
      bool same_code = compile(parse_source(corpus[i])) ==
                       compile(parse_source(corpus[j]));
      CHECK(same_class == same_code);
    }
}

TEST_CASE("rendering") {
  KernelPartition p = kernel_classes(kGolden, CompilerKind::PlainA, kDefaultFuel);
  std::string text = partition_to_text(p);
  CHECK(text.find("2 classes") != std::string::npos);
  CHECK(text.find("x + ~(1+1)") != std::string::npos);
  nlohmann::json j = partition_to_json(p);
  CHECK(j["classes"].size() == 2);
  CHECK(j["classes"][0]["members"].size() == 3);
}

TEST_CASE("a pipeline compared with itself is Equal") {
  Pipeline a = pipeline_for(CompilerKind::PlainA, kDefaultFuel);
  StagingComparison c = compare_staging(kGolden, a, a);
  CHECK(c.relation == StagingComparison::Relation::Equal);
  CHECK(c.compared_members == 5);
  CHECK(c.merged_only_in_a.empty());
  CHECK(c.merged_only_in_b.empty());
}

TEST_CASE("the source compiler and the embedded host pipeline stage alike") {
  Pipeline a = pipeline_for(CompilerKind::PlainA, kDefaultFuel);
  Pipeline u = pipeline_for(CompilerKind::EmbeddedU, kDefaultFuel);

  StagingComparison golden = compare_staging(kGolden, a, u);
  CHECK(golden.relation == StagingComparison::Relation::Equal);

  TermGen gen(88);
  std::vector<std::string> corpus;
  for (const TermPtr& t : gen.corpus(60, 5, /*inject_duplicates=*/true))
    corpus.push_back(format_source(t));
  StagingComparison random = compare_staging(corpus, a, u);
  // stage preservation requires at least: every A-merge is a U-merge
  CHECK((random.relation == StagingComparison::Relation::Equal ||
         random.relation == StagingComparison::Relation::Refines));
  CHECK(random.merged_only_in_a.empty());
}

TEST_CASE("compiling escapes at runtime coarsens the staging relation") {
  Pipeline a = pipeline_for(CompilerKind::PlainA, kDefaultFuel);
  Pipeline no_fold = [](const TermPtr& t) { return test::compile_no_escape(t); };

  StagingComparison c = compare_staging(kGolden, no_fold, a);
  // the runtime-escape compiler splits x+2 from x+~(1+1); the source
  // compiler merges them, so no_fold strictly refines it
  CHECK(c.relation == StagingComparison::Relation::Refines);
  CHECK(c.merged_only_in_a.empty());
  REQUIRE_FALSE(c.merged_only_in_b.empty());
  auto witnessed = [&](const char* x, const char* y) {
    return std::any_of(c.merged_only_in_b.begin(), c.merged_only_in_b.end(),
                       [&](const auto& pr) {
                         return (pr.first == x && pr.second == y) ||
                                (pr.first == y && pr.second == x);
                       });
  };
  CHECK(witnessed("x + 2", "x + ~(1+1)"));
  CHECK(witnessed("y + 2", "y + ~(4-2)"));
}

TEST_CASE("coarsening and incomparability are detected") {
  // renames every LOADV to "v", merging programs that differ only in
  // variable choice
  Pipeline conflate_vars = [](const TermPtr& t) {
    CompiledProgram c = compile_a(t);
    if (!c.is_code()) return c;
    MachineCode m = *c.code();
    for (Instruction& ins : m.instrs)
      if (ins.op == Op::Loadv) ins.var = "v";
    return compiled_code(m);
  };
  // zeroes every PUSHI immediate, merging programs that differ only in
  // literal choice
  Pipeline drop_imm = [](const TermPtr& t) {
    CompiledProgram c = compile_a(t);
    if (!c.is_code()) return c;
    MachineCode m = *c.code();
    for (Instruction& ins : m.instrs)
      if (ins.op == Op::Pushi) ins.imm = 0;
    return compiled_code(m);
  };
  Pipeline constant = [](const TermPtr&) {
    return compiled_code(parse_machine("PUSHI 0"));
  };

  // everything strictly refines the one-class partition
  StagingComparison r = compare_staging({"x + 2", "x * 2"}, conflate_vars, constant);
  CHECK(r.relation == StagingComparison::Relation::Refines);
  StagingComparison co = compare_staging({"x + 2", "x * 2"}, constant, conflate_vars);
  CHECK(co.relation == StagingComparison::Relation::Coarsens);

  // crossed partitions: conflate_vars merges (x+2, y+2) which drop_imm
  // splits on the variable; drop_imm merges (x+2, x+3) which
  // conflate_vars splits on the literal
  StagingComparison crossed =
      compare_staging({"x + 2", "y + 2", "x + 3"}, conflate_vars, drop_imm);
  CHECK(crossed.relation == StagingComparison::Relation::Incomparable);
  CHECK_FALSE(crossed.merged_only_in_a.empty());
  CHECK_FALSE(crossed.merged_only_in_b.empty());
}

TEST_CASE("the safe pipeline maps ill-typed members to unsafe classes") {
  KernelPartition p = kernel_classes({"1 + true", "if x then 1 else 2", "x + 1"},
                                     CompilerKind::SafeA, kDefaultFuel);
  REQUIRE(p.classes.size() == 2);
  // both ill-typed programs land in the shared Unsafe class
  bool found_unsafe = false;
  for (const KernelClass& k : p.classes)
    if (k.representative.is_unsafe()) {
      found_unsafe = true;
      CHECK(k.members.size() == 2);
    }
  CHECK(found_unsafe);
}
