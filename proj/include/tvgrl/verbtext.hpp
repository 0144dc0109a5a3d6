#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tvgrl/types.hpp"

namespace tvgrl::verbtext {

/// A lowercased word token and where it sits in the source text.
struct Token {
  std::string text;
  std::size_t offset = 0;  // byte offset of the token in the source
  std::size_t length = 0;  // byte length in the source
};

/// Lowercased word tokens with punctuation stripped. Letters, digits and
/// non-ASCII bytes form words; apostrophes and hyphens are kept only between
/// word characters. The blank marker "[ ]" (any inner whitespace) is kept as a
/// single token equal to kBlankMarker.
std::vector<std::string> tokenize(std::string_view sentence);
std::vector<Token> tokenize_spans(std::string_view sentence);

/// Verb lemmas plus irregular inflections. Immutable after construction.
///
/// Text format: one lemma per line, irregular forms as "form<TAB>lemma",
/// '#' starts a comment line. Irregular targets are added as lemmas. An
/// irregular form may not itself be a lemma, otherwise lemmatization would not
/// be idempotent; such files are rejected.
class Lexicon {
 public:
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);
  /// The lexicon compiled into the library (data/verbs.txt).
  static const Lexicon& builtin();

  bool contains(std::string_view lemma) const;
  std::optional<std::string_view> irregular(std::string_view form) const;
  std::size_t size() const { return lemmas_.size(); }
  std::size_t irregular_count() const { return irregular_.size(); }
  const std::unordered_map<std::string, std::string>& irregular_forms() const {
    return irregular_;
  }
  std::vector<std::string> sorted_lemmas() const;

 private:
  std::unordered_set<std::string> lemmas_;
  std::unordered_map<std::string, std::string> irregular_;
};

/// Base form of a verb token. Irregular table first, then the lexicon itself,
/// then suffix rules (-ies, -es, -s, -ied, doubled consonant + -ed, -ed,
/// doubled consonant + -ing, -ing) whose candidates are accepted only if the
/// lexicon knows them. Unknown forms come back unchanged (lowercased).
VerbLemma lemmatize_verb(std::string_view token,
                         const Lexicon& lexicon = Lexicon::builtin());

struct VerbHit {
  std::string surface;
  VerbLemma lemma;
  std::size_t token_index = 0;  // index into tokenize(sentence)
  friend bool operator==(const VerbHit&, const VerbHit&) = default;
};

/// Tokens whose lemma is a lexicon verb, in sentence order. A token directly
/// after a determiner ("the", "a", "his", ...) is treated as a noun, "be" is
/// never reported, and "have"/"do" are skipped when used as auxiliaries.
std::vector<VerbHit> extract_verbs(std::string_view sentence,
                                   const Lexicon& lexicon = Lexicon::builtin());

/// Same lemma.
bool is_variant(std::string_view a, std::string_view b,
                const Lexicon& lexicon = Lexicon::builtin());

enum class Inflection { Base, ThirdPerson, Past, Progressive };

/// Regular English inflection of a lemma (be/have/do/go special-cased for the
/// third person). No consonant doubling, so only verbs that do not double
/// round-trip through lemmatize_verb.
std::string inflect(const VerbLemma& lemma, Inflection form);

}  // namespace tvgrl::verbtext
