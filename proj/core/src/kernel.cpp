#include "stagelab/kernel.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace stagelab {

CompilerKind compiler_kind_from_name(const std::string& name) {
  if (name == "a") return CompilerKind::PlainA;
  if (name == "a-safe") return CompilerKind::SafeA;
  if (name == "u-embed") return CompilerKind::EmbeddedU;
  throw std::invalid_argument("unknown compiler '" + name +
                              "' (expected a, a-safe or u-embed)");
}

std::string compiler_kind_name(CompilerKind kind) {
  switch (kind) {
    case CompilerKind::PlainA: return "a";
    case CompilerKind::SafeA: return "a-safe";
    default: return "u-embed";
  }
}

Pipeline pipeline_for(CompilerKind kind, std::int64_t fuel) {
  switch (kind) {
    case CompilerKind::PlainA:
      return [fuel](const TermPtr& p) { return compile_a(p, fuel); };
    case CompilerKind::SafeA:
      return [fuel](const TermPtr& p) { return compile_a_safe(p, fuel); };
    default:
      return [fuel](const TermPtr& p) { return compile_u(embed_stage(p), fuel); };
  }
}

std::vector<std::string> load_corpus_text(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r");
    std::string trimmed = line.substr(begin, end - begin + 1);
    if (trimmed[0] == '#') continue;
    out.push_back(std::move(trimmed));
  }
  return out;
}

std::vector<std::string> load_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_corpus_text(buf.str());
}

KernelPartition kernel_classes(const std::vector<std::string>& corpus,
                               CompilerKind compiler, std::int64_t fuel) {
  Pipeline pipeline = pipeline_for(compiler, fuel);
  KernelPartition partition;
  std::unordered_map<std::string, std::size_t> index_by_output;
  for (const std::string& text : corpus) {
    CompiledProgram out;
    try {
      out = pipeline(parse_source(text));
    } catch (const ParseError& e) {
      partition.unmapped.emplace_back(text, std::string("parse error: ") + e.what());
      continue;
    }
    if (out.is_bottom() || out.is_error()) {
      partition.unmapped.emplace_back(text, format_compiled(out));
      continue;
    }
    std::string key = format_compiled(out);
    auto [it, inserted] = index_by_output.emplace(key, partition.classes.size());
    if (inserted) partition.classes.push_back({out, {}});
    partition.classes[it->second].members.push_back(text);
  }
  return partition;
}

std::string partition_to_text(const KernelPartition& p) {
  std::ostringstream out;
  out << p.classes.size() << " class" << (p.classes.size() == 1 ? "" : "es") << '\n';
  for (std::size_t i = 0; i < p.classes.size(); ++i) {
    const KernelClass& cls = p.classes[i];
    out << "class " << (i + 1) << " (" << cls.members.size() << " member"
        << (cls.members.size() == 1 ? "" : "s") << "):\n";
    out << "  target:\n";
    std::istringstream target(format_compiled(cls.representative));
    std::string line;
    while (std::getline(target, line)) out << "    " << line << '\n';
    out << "  members:\n";
    for (const std::string& m : cls.members) out << "    " << m << '\n';
  }
  if (!p.unmapped.empty()) {
    out << "unmapped:\n";
    for (const auto& [text, reason] : p.unmapped)
      out << "  " << text << "  [" << reason << "]\n";
  }
  return out.str();
}

nlohmann::json partition_to_json(const KernelPartition& p) {
  nlohmann::json classes = nlohmann::json::array();
  for (const KernelClass& cls : p.classes) {
    classes.push_back({{"target", format_compiled(cls.representative)},
                       {"members", cls.members}});
  }
  nlohmann::json unmapped = nlohmann::json::array();
  for (const auto& [text, reason] : p.unmapped)
    unmapped.push_back({{"program", text}, {"reason", reason}});
  return {{"classes", classes}, {"unmapped", unmapped}};
}

std::string relation_name(StagingComparison::Relation r) {
  switch (r) {
    case StagingComparison::Relation::Equal: return "equal";
    case StagingComparison::Relation::Refines: return "refines";
    case StagingComparison::Relation::Coarsens: return "coarsens";
    default: return "incomparable";
  }
}

StagingComparison compare_staging(const std::vector<std::string>& corpus,
                                  const Pipeline& a, const Pipeline& b) {
  constexpr std::size_t kWitnessCap = 10;
  StagingComparison cmp{};

  struct Member {
    std::string text;
    std::string key_a, key_b;
  };
  std::vector<Member> members;
  for (const std::string& text : corpus) {
    TermPtr p;
    try {
      p = parse_source(text);
    } catch (const ParseError&) {
      ++cmp.excluded_members;
      continue;
    }
    CompiledProgram oa = a(p);
    CompiledProgram ob = b(p);
    if (oa.is_bottom() || oa.is_error() || ob.is_bottom() || ob.is_error()) {
      ++cmp.excluded_members;
      continue;
    }
    members.push_back({text, format_compiled(oa), format_compiled(ob)});
  }
  cmp.compared_members = members.size();

  bool a_implies_b = true, b_implies_a = true;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      bool eq_a = members[i].key_a == members[j].key_a;
      bool eq_b = members[i].key_b == members[j].key_b;
      if (eq_a && !eq_b) {
        a_implies_b = false;
        if (cmp.merged_only_in_a.size() < kWitnessCap)
          cmp.merged_only_in_a.emplace_back(members[i].text, members[j].text);
      }
      if (eq_b && !eq_a) {
        b_implies_a = false;
        if (cmp.merged_only_in_b.size() < kWitnessCap)
          cmp.merged_only_in_b.emplace_back(members[i].text, members[j].text);
      }
    }
  }
  if (a_implies_b && b_implies_a) cmp.relation = StagingComparison::Relation::Equal;
  else if (a_implies_b) cmp.relation = StagingComparison::Relation::Refines;
  else if (b_implies_a) cmp.relation = StagingComparison::Relation::Coarsens;
  else cmp.relation = StagingComparison::Relation::Incomparable;
  return cmp;
}

nlohmann::json comparison_to_json(const StagingComparison& c) {
  auto pairs = [](const std::vector<std::pair<std::string, std::string>>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [x, y] : v) out.push_back({{"first", x}, {"second", y}});
    return out;
  };
  return {{"relation", relation_name(c.relation)},
          {"compared_members", c.compared_members},
          {"excluded_members", c.excluded_members},
          {"merged_only_in_a", pairs(c.merged_only_in_a)},
          {"merged_only_in_b", pairs(c.merged_only_in_b)}};
}

} // namespace stagelab
