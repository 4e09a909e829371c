#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagelab/host.hpp"

namespace stagelab {

/// The stage-preserving embedding from the staged source language into
/// the host: emit(compile_a(quoteA p)). Injective because the quoted
/// term embeds p verbatim.
HostProgram embed_stage(const TermPtr& p);

/// The safety-preserving variant, routing through the safety-layered
/// compiler primitive: emit(compile_a_safe(quoteA p)).
HostProgram embed_safe(const TermPtr& p);

using Embedding = std::function<HostProgram(const TermPtr&)>;

struct CheckFailure {
  std::string kind;    // which check broke
  std::string witness; // corpus program (or pair) exhibiting the failure
  std::string detail;
};

struct EmbeddingReport {
  std::size_t corpus_size = 0;
  std::size_t pairs_checked = 0;
  std::size_t semantics_pass = 0, semantics_fail = 0;
  std::size_t stage_pass = 0, stage_fail = 0;
  std::size_t safety_pass = 0, safety_fail = 0;
  // source judgment ("safe"/"not_safe") x embedded compile outcome kind
  std::map<std::string, std::map<std::string, std::size_t>> safety_table;
  std::vector<CheckFailure> failures;
  std::int64_t fuel = 0;

  bool ok() const {
    return semantics_fail == 0 && stage_fail == 0 && safety_fail == 0 &&
           failures.empty();
  }
};

nlohmann::json report_to_json(const EmbeddingReport& r);
std::string report_to_text(const EmbeddingReport& r);

/// For every corpus term, requires the source compilation and the
/// compiled embedded program to be observationally equivalent. With no
/// suite given, a default suite over the union of input variables of the
/// two programs is used per term.
EmbeddingReport check_semantics_preserving(const Embedding& e,
                                           const std::vector<TermPtr>& corpus,
                                           const std::vector<Env>* suite,
                                           std::int64_t fuel);

/// For every corpus pair compiling to structurally equal outputs under
/// the source compiler, requires the embedded programs to compile to
/// structurally equal outputs as well. The two routes are not required
/// to produce the same target program.
EmbeddingReport check_stage_preserving(const Embedding& e,
                                       const std::vector<TermPtr>& corpus,
                                       std::int64_t fuel);

/// Requires, per term: the embedded safe compilation is Unsafe exactly
/// when the direct safe compiler yields Unsafe, exactly when the safety
/// judgment fails.
EmbeddingReport check_safety_preserving(const std::vector<TermPtr>& corpus,
                                        std::int64_t fuel);

/// An oracle for a function over codes; disengaged means the oracle
/// diverges on that input (the sample is skipped and reported).
using CodeOracle = std::function<std::optional<ValuePtr>(const ValuePtr&)>;

struct RealizabilityReport {
  std::size_t samples = 0;
  std::size_t pass = 0, fail = 0, skipped = 0;
  std::vector<CheckFailure> failures;

  bool ok() const { return fail == 0; } // skipped samples are reported, not fatal
};

nlohmann::json realizability_to_json(const RealizabilityReport& r);

/// Checks that a meta-function F is evaluated while compiling: for each
/// sample x with y = oracle(x), compiling P[F(<x>)] and P[<y>] must give
/// structurally equal outputs. P is a program template with a hole.
RealizabilityReport check_realizable(const MetaPtr& f, const CodeOracle& oracle,
                                     const std::vector<ValuePtr>& samples,
                                     const HostProgram& program_template,
                                     std::int64_t fuel);

} // namespace stagelab
