#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "stagelab/source.hpp"

namespace stagelab {

/// Seed-deterministic generators for source terms and machine programs.
/// Escape bodies are always generated closed, so every generated term is
/// a language member.
class TermGen {
public:
  explicit TermGen(std::uint64_t seed) : rng_(seed) {}

  /// A well-typed term of the requested type. With allow_vars, integer
  /// leaves may be free variables (typed int by convention).
  TermPtr typed_term(SType type, int max_depth, bool allow_vars = true);

  /// A term guaranteed to fail the safety judgment: a well-typed skeleton
  /// with a planted type error.
  TermPtr ill_typed_term(int max_depth);

  /// Rewrites one integer literal outside any escape into an escape
  /// computing the same value; disengaged when no such literal exists.
  /// The result occupies the same kernel class as the input.
  std::optional<TermPtr> escape_rewrite(const TermPtr& t);

  /// Corpus of well-typed terms; when inject_duplicates, roughly half the
  /// entries are escape rewrites of earlier entries.
  std::vector<TermPtr> corpus(std::size_t n, int max_depth, bool inject_duplicates);

  /// Corpus mixing well-typed and deliberately ill-typed terms.
  std::vector<TermPtr> safety_corpus(std::size_t n, int max_depth,
                                     double ill_typed_fraction = 0.5);

  /// A random machine program; jump offsets always land in range.
  MachineCode machine_program(int max_len);

  std::mt19937_64& rng() { return rng_; }

private:
  std::int64_t small_int();
  std::string var_name();

  std::mt19937_64 rng_;
};

} // namespace stagelab
