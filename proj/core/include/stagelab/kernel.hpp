#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagelab/embedding.hpp"

namespace stagelab {

/// Which compilation pipeline to partition a corpus under.
enum class CompilerKind {
  PlainA,     // the source compiler
  SafeA,      // the safety-layered source compiler
  EmbeddedU,  // host compilation of the stage embedding
};

CompilerKind compiler_kind_from_name(const std::string& name); // a | a-safe | u-embed
std::string compiler_kind_name(CompilerKind kind);

using Pipeline = std::function<CompiledProgram(const TermPtr&)>;
Pipeline pipeline_for(CompilerKind kind, std::int64_t fuel);

struct KernelClass {
  CompiledProgram representative;
  std::vector<std::string> members; // source texts, in corpus order
};

/// A corpus partitioned by structural equality of compiler output.
/// Members whose compilation is Bottom or Error (or which fail to parse)
/// are listed separately rather than merged into classes.
struct KernelPartition {
  std::vector<KernelClass> classes; // ordered by first occurrence
  std::vector<std::pair<std::string, std::string>> unmapped; // text, reason
};

/// One program per line; '#' lines and blank lines are ignored.
std::vector<std::string> load_corpus_text(const std::string& text);
std::vector<std::string> load_corpus_file(const std::string& path);

KernelPartition kernel_classes(const std::vector<std::string>& corpus,
                               CompilerKind compiler, std::int64_t fuel);

std::string partition_to_text(const KernelPartition& p);
nlohmann::json partition_to_json(const KernelPartition& p);

/// Empirical comparison of two pipelines' partitions over one corpus.
/// "A refines B" means every pair merged by A is merged by B. Members
/// unmapped under either pipeline are excluded from the pair relations.
/// This witnesses consistency with the staging preorder on this corpus
/// only; it proves nothing beyond it.
struct StagingComparison {
  enum class Relation { Equal, Refines, Coarsens, Incomparable };
  Relation relation;
  std::size_t compared_members = 0;
  std::size_t excluded_members = 0;
  // pairs merged by A but split by B, and the reverse; capped
  std::vector<std::pair<std::string, std::string>> merged_only_in_a;
  std::vector<std::pair<std::string, std::string>> merged_only_in_b;
};

std::string relation_name(StagingComparison::Relation r);

StagingComparison compare_staging(const std::vector<std::string>& corpus,
                                  const Pipeline& a, const Pipeline& b);

nlohmann::json comparison_to_json(const StagingComparison& c);

} // namespace stagelab
