#include <algorithm>
#include <fstream>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/verbtext.hpp"

namespace tvgrl::verbtext {

namespace detail {
extern const std::string_view kBuiltinLexicon;
}

namespace {

bool is_lemma_text(std::string_view s) {
  if (s.empty() || s.front() == '-' || s.back() == '-') return false;
  for (char c : s) {
    if (!((c >= 'a' && c <= 'z') || c == '-')) return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      const auto lemma = trim(line);
      if (!is_lemma_text(lemma)) {
        throw ParseError("malformed lemma '" + std::string(lemma) + "'", line_no);
      }
      lex.lemmas_.emplace(lemma);
    } else {
      const auto form = trim(line.substr(0, tab));
      const auto lemma = trim(line.substr(tab + 1));
      if (!is_lemma_text(form) || !is_lemma_text(lemma)) {
        throw ParseError("malformed irregular entry", line_no);
      }
      lex.irregular_[std::string(form)] = std::string(lemma);
    }
  }
  for (const auto& [form, lemma] : lex.irregular_) lex.lemmas_.insert(lemma);
  for (const auto& [form, lemma] : lex.irregular_) {
    if (lex.lemmas_.contains(form)) {
      throw ParseError("irregular form '" + form + "' is also a lemma");
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  return parse(read_text_file(path.string()));
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = parse(detail::kBuiltinLexicon);
  return lex;
}

bool Lexicon::contains(std::string_view lemma) const {
  return lemmas_.find(std::string(lemma)) != lemmas_.end();
}

std::optional<std::string_view> Lexicon::irregular(std::string_view form) const {
  const auto it = irregular_.find(std::string(form));
  if (it == irregular_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::vector<std::string> Lexicon::sorted_lemmas() const {
  std::vector<std::string> out(lemmas_.begin(), lemmas_.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tvgrl::verbtext
