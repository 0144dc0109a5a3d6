#include <charconv>

#include "tvgrl/rewards.hpp"

namespace tvgrl::rewards {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// Content of the single open/close pair, if each tag occurs exactly once and
// in order.
std::optional<std::string_view> single_block(std::string_view s, std::string_view open,
                                             std::string_view close) {
  if (count(s, open) != 1 || count(s, close) != 1) return std::nullopt;
  const auto o = s.find(open);
  const auto c = s.find(close);
  if (c < o + open.size()) return std::nullopt;
  return s.substr(o + open.size(), c - o - open.size());
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Unsigned decimal: digits with optional fraction, or a bare fraction.
std::optional<double> take_number(std::string_view& s) {
  std::size_t i = 0;
  std::size_t int_digits = 0;
  while (i < s.size() && is_digit(s[i])) ++i, ++int_digits;
  std::size_t frac_digits = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + i, value);
  if (ec != std::errc() || ptr != s.data() + i) return std::nullopt;
  s.remove_prefix(i);
  return value;
}

}  // namespace

std::optional<Segment> parse_answer_segment(std::string_view answer) {
  auto s = trim(answer);
  const auto start = take_number(s);
  if (!start) return std::nullopt;
  const auto before = s.size();
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  if (s.size() == before || s.substr(0, 2) != "to") return std::nullopt;
  s.remove_prefix(2);
  const auto before_end = s.size();
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  if (s.size() == before_end) return std::nullopt;
  const auto end = take_number(s);
  if (!end || !s.empty()) return std::nullopt;
  if (*start > *end) return std::nullopt;
  return Segment{*start, *end};
}

ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse out;
  const auto think = single_block(raw, kThinkOpen, kThinkClose);
  const auto answer = single_block(raw, kAnswerOpen, kAnswerClose);
  if (think) out.think = std::string(*think);
  if (answer) {
    out.answer_text = std::string(*answer);
    out.answer_segment = parse_answer_segment(*answer);
  }
  if (think && answer) {
    const auto body = trim(raw);
    const auto think_close = body.find(kThinkClose);
    const auto answer_open = body.find(kAnswerOpen);
    const bool starts = body.substr(0, kThinkOpen.size()) == kThinkOpen;
    const bool ends = body.size() >= kAnswerClose.size() &&
                      body.substr(body.size() - kAnswerClose.size()) == kAnswerClose;
    bool gap_is_blank = answer_open != std::string_view::npos &&
                        answer_open >= think_close + kThinkClose.size();
    if (gap_is_blank) {
      for (auto c : body.substr(think_close + kThinkClose.size(),
                                answer_open - think_close - kThinkClose.size())) {
        if (!is_space(c)) gap_is_blank = false;
      }
    }
    out.format_ok = starts && ends && gap_is_blank;
  }
  return out;
}

double format_reward(std::string_view raw) { return parse_response(raw).format_ok ? 1.0 : 0.0; }

}  // namespace tvgrl::rewards
