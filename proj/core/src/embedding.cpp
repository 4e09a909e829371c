#include "stagelab/embedding.hpp"

#include <sstream>
#include <unordered_map>

namespace stagelab {

HostProgram embed_stage(const TermPtr& p) {
  return interp_program(m_apply(m_prim("compile_a"), m_quote_a(p)));
}

HostProgram embed_safe(const TermPtr& p) {
  return interp_program(m_apply(m_prim("compile_a_safe"), m_quote_a(p)));
}

nlohmann::json report_to_json(const EmbeddingReport& r) {
  nlohmann::json j;
  j["corpus_size"] = r.corpus_size;
  j["pairs_checked"] = r.pairs_checked;
  j["semantics"] = {{"pass", r.semantics_pass}, {"fail", r.semantics_fail}};
  j["stage"] = {{"pass", r.stage_pass}, {"fail", r.stage_fail}};
  j["safety"] = {{"pass", r.safety_pass}, {"fail", r.safety_fail}};
  j["safety_table"] = r.safety_table;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures)
    fails.push_back({{"kind", f.kind}, {"witness", f.witness}, {"detail", f.detail}});
  j["failures"] = fails;
  j["fuel"] = r.fuel;
  j["ok"] = r.ok();
  return j;
}

std::string report_to_text(const EmbeddingReport& r) {
  std::ostringstream out;
  out << "corpus size:    " << r.corpus_size << '\n';
  out << "pairs checked:  " << r.pairs_checked << '\n';
  out << "semantics:      " << r.semantics_pass << " pass, " << r.semantics_fail
      << " fail\n";
  out << "stage:          " << r.stage_pass << " pass, " << r.stage_fail << " fail\n";
  out << "safety:         " << r.safety_pass << " pass, " << r.safety_fail << " fail\n";
  if (!r.safety_table.empty()) {
    out << "safety table (judgment x outcome):\n";
    for (const auto& [judgment, row] : r.safety_table)
      for (const auto& [outcome, count] : row)
        out << "  " << judgment << " -> " << outcome << ": " << count << '\n';
  }
  for (const auto& f : r.failures)
    out << "FAIL [" << f.kind << "] " << f.witness << ": " << f.detail << '\n';
  out << "fuel:           " << r.fuel << '\n';
  out << (r.ok() ? "OK" : "FAILED") << '\n';
  return out.str();
}

EmbeddingReport check_semantics_preserving(const Embedding& e,
                                           const std::vector<TermPtr>& corpus,
                                           const std::vector<Env>* suite,
                                           std::int64_t fuel) {
  EmbeddingReport report;
  report.corpus_size = corpus.size();
  report.fuel = fuel;
  for (const TermPtr& p : corpus) {
    CompiledProgram direct = compile_a(p, fuel);
    CompiledProgram embedded = compile_u(e(p), fuel);
    bool equal;
    if (direct.is_code() && embedded.is_code()) {
      std::vector<Env> local;
      const std::vector<Env>* use = suite;
      if (!use) {
        local = default_suite_for(*direct.code(), *embedded.code());
        use = &local;
      }
      equal = obs_equiv(direct, embedded, *use, fuel);
    } else {
      equal = direct.v.index() == embedded.v.index();
    }
    if (equal) {
      ++report.semantics_pass;
    } else {
      ++report.semantics_fail;
      report.failures.push_back({"semantics", format_source(p),
                                 "direct " + outcome_kind(direct) + " vs embedded " +
                                     outcome_kind(embedded)});
    }
  }
  return report;
}

EmbeddingReport check_stage_preserving(const Embedding& e,
                                       const std::vector<TermPtr>& corpus,
                                       std::int64_t fuel) {
  EmbeddingReport report;
  report.corpus_size = corpus.size();
  report.fuel = fuel;

  // Group corpus members by their source-compiler output; within a group
  // every pair lies in the source kernel, so the embedded outputs must
  // all coincide.
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  std::vector<CompiledProgram> embedded(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    groups[format_compiled(compile_a(corpus[i], fuel))].push_back(i);
    embedded[i] = compile_u(e(corpus[i]), fuel);
  }
  for (const auto& [key, members] : groups) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        ++report.pairs_checked;
        std::size_t i = members[a], j = members[b];
        if (embedded[i] == embedded[j]) {
          ++report.stage_pass;
        } else {
          ++report.stage_fail;
          report.failures.push_back(
              {"stage", format_source(corpus[i]) + "  /  " + format_source(corpus[j]),
               "equal source compilation but embedded outputs differ"});
        }
      }
    }
  }
  return report;
}

EmbeddingReport check_safety_preserving(const std::vector<TermPtr>& corpus,
                                        std::int64_t fuel) {
  EmbeddingReport report;
  report.corpus_size = corpus.size();
  report.fuel = fuel;
  for (const TermPtr& p : corpus) {
    SafetyJudgment judgment = typecheck(p);
    CompiledProgram direct = compile_a_safe(p, fuel);
    CompiledProgram embedded = compile_u(embed_safe(p), fuel);
    std::string row = judgment.safe() ? "safe" : "not_safe";
    ++report.safety_table[row][outcome_kind(embedded)];

    bool agree = (embedded.is_unsafe() == direct.is_unsafe()) &&
                 (embedded.is_unsafe() == !judgment.safe());
    if (agree) {
      ++report.safety_pass;
    } else {
      ++report.safety_fail;
      report.failures.push_back(
          {"safety", format_source(p),
           "judgment " + row + ", direct " + outcome_kind(direct) + ", embedded " +
               outcome_kind(embedded)});
    }
  }
  return report;
}

nlohmann::json realizability_to_json(const RealizabilityReport& r) {
  nlohmann::json j;
  j["samples"] = r.samples;
  j["pass"] = r.pass;
  j["fail"] = r.fail;
  j["skipped"] = r.skipped;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures)
    fails.push_back({{"kind", f.kind}, {"witness", f.witness}, {"detail", f.detail}});
  j["failures"] = fails;
  j["ok"] = r.ok();
  return j;
}

RealizabilityReport check_realizable(const MetaPtr& f, const CodeOracle& oracle,
                                     const std::vector<ValuePtr>& samples,
                                     const HostProgram& program_template,
                                     std::int64_t fuel) {
  RealizabilityReport report;
  report.samples = samples.size();
  HostProgram composed = apply_program(program_template, f);
  for (const ValuePtr& x : samples) {
    std::optional<ValuePtr> y = oracle(x);
    if (!y) {
      ++report.skipped;
      report.failures.push_back(
          {"realizable-skip", canonical_code(x), "oracle diverged; sample skipped"});
      continue;
    }
    CompiledProgram via_f = compile_u(instantiate(composed, quote_value(x)), fuel);
    CompiledProgram via_oracle =
        compile_u(instantiate(program_template, quote_value(*y)), fuel);
    if (via_f == via_oracle) {
      ++report.pass;
    } else {
      ++report.fail;
      report.failures.push_back({"realizable", canonical_code(x),
                                 "P[F(<x>)] gives " + outcome_kind(via_f) +
                                     " but P[<y>] gives " + outcome_kind(via_oracle)});
    }
  }
  return report;
}

} // namespace stagelab
