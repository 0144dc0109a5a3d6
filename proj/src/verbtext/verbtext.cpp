#include <array>

#include "tvgrl/verbtext.hpp"

namespace tvgrl::verbtext {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c >= 0x80;
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool is_consonant(char c) { return c >= 'a' && c <= 'z' && !is_vowel(c); }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool has_doubled_final_consonant(std::string_view stem) {
  const auto n = stem.size();
  return n >= 3 && stem[n - 1] == stem[n - 2] && is_consonant(stem[n - 1]);
}

// consonant-vowel-consonant ending ("hop", "clos"): the silent-e form is the
// more likely base when both forms are verbs ("hoped" -> "hope").
bool prefers_silent_e(std::string_view stem) {
  const auto n = stem.size();
  if (n < 2) return false;
  const char last = stem[n - 1];
  if (!is_consonant(last) || last == 'w' || last == 'x' || last == 'y') return false;
  if (!is_vowel(stem[n - 2])) return false;
  return n == 2 || !is_vowel(stem[n - 3]);
}

void push_e_candidates(std::vector<std::string>& out, std::string_view stem) {
  if (stem.size() < 2) return;
  const std::string bare(stem);
  const std::string with_e = bare + "e";
  if (prefers_silent_e(stem)) {
    out.push_back(with_e);
    out.push_back(bare);
  } else {
    out.push_back(bare);
    out.push_back(with_e);
  }
}

std::vector<std::string> suffix_candidates(std::string_view t) {
  std::vector<std::string> out;
  if (ends_with(t, "ies") && t.size() > 4) {
    out.push_back(std::string(t.substr(0, t.size() - 3)) + "y");
  }
  if (ends_with(t, "es") && t.size() > 3) {
    const auto stem = t.substr(0, t.size() - 2);
    if (ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") ||
        ends_with(stem, "ch") || ends_with(stem, "sh")) {
      out.emplace_back(stem);
    }
  }
  if (ends_with(t, "s") && !ends_with(t, "ss") && t.size() > 2) {
    out.emplace_back(t.substr(0, t.size() - 1));
  }
  if (ends_with(t, "ied") && t.size() > 4) {
    out.push_back(std::string(t.substr(0, t.size() - 3)) + "y");
  }
  if (ends_with(t, "ed") && t.size() > 3) {
    const auto stem = t.substr(0, t.size() - 2);
    if (has_doubled_final_consonant(stem)) out.emplace_back(stem.substr(0, stem.size() - 1));
    push_e_candidates(out, stem);
  }
  if (ends_with(t, "ing") && t.size() > 4) {
    const auto stem = t.substr(0, t.size() - 3);
    if (has_doubled_final_consonant(stem)) out.emplace_back(stem.substr(0, stem.size() - 1));
    push_e_candidates(out, stem);
  }
  return out;
}

constexpr std::array<std::string_view, 17> kDeterminers = {
    "a",    "an",   "the",  "this", "these", "those",   "his",  "her",  "their",
    "its",  "my",   "your", "our",  "some",  "another", "each", "every"};

bool is_determiner(std::string_view t) {
  for (auto d : kDeterminers) {
    if (d == t) return true;
  }
  return false;
}

}  // namespace

std::vector<Token> tokenize_spans(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == '[') {
      std::size_t j = i + 1;
      while (j < n && (s[j] == ' ' || s[j] == '\t')) ++j;
      if (j < n && s[j] == ']') {
        out.push_back({std::string(kBlankMarker), i, j + 1 - i});
        i = j + 1;
        continue;
      }
    }
    if (!is_word_byte(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string text;
    while (i < n) {
      const auto ch = static_cast<unsigned char>(s[i]);
      if (is_word_byte(ch)) {
        text.push_back(lower(s[i]));
        ++i;
      } else if ((ch == '\'' || ch == '-') && i + 1 < n &&
                 is_word_byte(static_cast<unsigned char>(s[i + 1]))) {
        text.push_back(s[i]);
        ++i;
      } else {
        break;
      }
    }
    out.push_back({std::move(text), start, i - start});
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> out;
  for (auto& t : tokenize_spans(sentence)) out.push_back(std::move(t.text));
  return out;
}

VerbLemma lemmatize_verb(std::string_view token, const Lexicon& lexicon) {
  const std::string t = lowercase(token);
  if (auto irr = lexicon.irregular(t)) return VerbLemma(std::string(*irr));
  if (lexicon.contains(t)) return VerbLemma(t);
  for (auto& candidate : suffix_candidates(t)) {
    if (lexicon.contains(candidate)) return VerbLemma(std::move(candidate));
  }
  return VerbLemma(t);
}

std::vector<VerbHit> extract_verbs(std::string_view sentence, const Lexicon& lexicon) {
  const auto tokens = tokenize(sentence);
  std::vector<VerbLemma> lemmas;
  std::vector<bool> known;
  lemmas.reserve(tokens.size());
  for (const auto& t : tokens) {
    lemmas.push_back(lemmatize_verb(t, lexicon));
    known.push_back(t != kBlankMarker && lexicon.contains(lemmas.back().value));
  }

  auto verb_follows = [&](std::size_t i) {
    std::size_t j = i + 1;
    while (j < tokens.size() && (tokens[j] == "not" || tokens[j] == "n't")) ++j;
    return j < tokens.size() && known[j] && !(j > 0 && is_determiner(tokens[j - 1]));
  };

  std::vector<VerbHit> hits;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!known[i]) continue;
    if (i > 0 && is_determiner(tokens[i - 1])) continue;
    const auto& lemma = lemmas[i].value;
    if (lemma == "be") continue;
    if ((lemma == "have" || lemma == "do") && verb_follows(i)) continue;
    hits.push_back({tokens[i], lemmas[i], i});
  }
  return hits;
}

bool is_variant(std::string_view a, std::string_view b, const Lexicon& lexicon) {
  return lemmatize_verb(a, lexicon) == lemmatize_verb(b, lexicon);
}

std::string inflect(const VerbLemma& lemma, Inflection form) {
  const std::string& v = lemma.value;
  if (v.empty()) return v;
  const char last = v.back();
  const bool consonant_y = last == 'y' && v.size() >= 2 && !is_vowel(v[v.size() - 2]);
  switch (form) {
    case Inflection::Base:
      return v;
    case Inflection::ThirdPerson:
      if (v == "be") return "is";
      if (v == "have") return "has";
      if (v == "do") return "does";
      if (v == "go") return "goes";
      if (consonant_y) return v.substr(0, v.size() - 1) + "ies";
      if (ends_with(v, "s") || ends_with(v, "x") || ends_with(v, "z") ||
          ends_with(v, "ch") || ends_with(v, "sh")) {
        return v + "es";
      }
      return v + "s";
    case Inflection::Past:
      if (consonant_y) return v.substr(0, v.size() - 1) + "ied";
      if (last == 'e') return v + "d";
      return v + "ed";
    case Inflection::Progressive:
      if (ends_with(v, "ie")) return v.substr(0, v.size() - 2) + "ying";
      if (last == 'e' && !ends_with(v, "ee") && !ends_with(v, "ye") && !ends_with(v, "oe")) {
        return v.substr(0, v.size() - 1) + "ing";
      }
      return v + "ing";
  }
  return v;
}

}  // namespace tvgrl::verbtext
