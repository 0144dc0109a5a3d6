#include <charconv>
#include <cmath>

#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/rewards.hpp"

namespace tvgrl::rewards {

EmbeddingTable::EmbeddingTable(const EmbeddingTable& other)
    : dim_(other.dim_), vectors_(other.vectors_), missing_(other.missing_.load()) {}

EmbeddingTable& EmbeddingTable::operator=(const EmbeddingTable& other) {
  dim_ = other.dim_;
  vectors_ = other.vectors_;
  missing_ = other.missing_.load();
  return *this;
}

void EmbeddingTable::add(std::string word, std::vector<double> vector) {
  if (vector.empty()) throw ArgumentError("empty embedding vector for '" + word + "'");
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    throw ArgumentError("embedding for '" + word + "' has dimension " +
                        std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  vectors_[std::move(word)] = std::move(vector);
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view word) const {
  const auto it = vectors_.find(std::string(word));
  if (it == vectors_.end()) return std::nullopt;
  return std::span<const double>(it->second);
}

EmbeddingTable EmbeddingTable::parse(std::string_view text) {
  EmbeddingTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      const auto start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
    if (fields.empty()) continue;
    if (fields.size() < 2) throw ParseError("embedding line has no vector", line_no);

    std::vector<double> vec;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      const auto f = fields[k];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError("malformed vector component '" + std::string(f) + "'", line_no);
      }
      vec.push_back(v);
    }
    try {
      table.add(std::string(fields[0]), std::move(vec));
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  return parse(read_text_file(path.string()));
}

double cosine_similarity_reward(std::string_view pred_verb, std::string_view gt_verb,
                                const EmbeddingTable& embeddings,
                                const verbtext::Lexicon& lexicon) {
  auto lookup = [&](std::string_view word) -> std::optional<std::span<const double>> {
    std::string lowered(word);
    for (auto& c : lowered) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    if (auto v = embeddings.find(lowered)) return v;
    return embeddings.find(verbtext::lemmatize_verb(lowered, lexicon).value);
  };
  const auto a = lookup(pred_verb);
  const auto b = lookup(gt_verb);
  if (!a || !b) {
    embeddings.note_missing();
    return 0.0;
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a->size(); ++i) {
    dot += (*a)[i] * (*b)[i];
    na += (*a)[i] * (*a)[i];
    nb += (*b)[i] * (*b)[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

}  // namespace tvgrl::rewards
