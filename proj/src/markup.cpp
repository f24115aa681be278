#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"
#include "termforge/smt.hpp"

namespace termforge {

namespace {

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view text) {
  static constexpr std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    bool replaced = false;
    if (text[i] == '&') {
      for (const auto& [entity, ch] : kEntities) {
        if (text.substr(i, entity.size()) == entity) {
          out += ch;
          i += entity.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += text[i++];
  }
  return out;
}

std::vector<std::string> split_alternatives(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = value.find("||", start);
    out.emplace_back(io::trim(value.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 2;
  }
}

}  // namespace

std::string format_markup(const AnnotatedInput& input) {
  input.validate();
  std::vector<std::string> parts;
  std::size_t next_span = 0;
  for (std::size_t i = 0; i < input.tokens.size();) {
    if (next_span < input.spans.size() && input.spans[next_span].start == i) {
      const auto& span = input.spans[next_span++];
      std::string translations, probs;
      for (std::size_t k = 0; k < span.candidates.size(); ++k) {
        if (k) {
          translations += "||";
          probs += " || ";
        }
        translations += escape(io::join(span.candidates[k].target));
        probs += io::format_double(span.candidates[k].prob);
      }
      Tokens inner(input.tokens.begin() + static_cast<std::ptrdiff_t>(span.start),
                   input.tokens.begin() + static_cast<std::ptrdiff_t>(span.end));
      parts.push_back(fmt::format("<n translation=\"{}\" prob=\"{}\">{}</n>", translations, probs,
                                  escape(io::join(inner))));
      i = span.end;
    } else {
      parts.push_back(escape(input.tokens[i++]));
    }
  }
  return io::join(parts);
}

AnnotatedInput parse_markup(std::string_view line, InjectionMode mode, const Normalization& norm) {
  AnnotatedInput out;
  auto append_text = [&](std::string_view text) {
    for (auto& t : tokenize(unescape(text), norm)) out.tokens.push_back(std::move(t));
  };
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto open = line.find('<', pos);
    if (open == std::string_view::npos) {
      append_text(line.substr(pos));
      break;
    }
    append_text(line.substr(pos, open - pos));
    auto close = line.find('>', open);
    if (close == std::string_view::npos) throw ParseError("unterminated tag at column " + std::to_string(open + 1));
    std::string_view tag = line.substr(open + 1, close - open - 1);
    if (!tag.empty() && (tag.front() == '/' || tag.back() == '/')) {
      throw ParseError("unexpected tag <" + std::string(tag) + "> at column " + std::to_string(open + 1));
    }
    auto name_end = tag.find_first_of(" \t");
    std::string name(tag.substr(0, name_end));
    if (name.empty()) throw ParseError("empty tag name at column " + std::to_string(open + 1));

    std::string translation, prob;
    bool have_translation = false, have_prob = false;
    std::size_t a = name_end == std::string_view::npos ? tag.size() : name_end;
    while (a < tag.size()) {
      while (a < tag.size() && (tag[a] == ' ' || tag[a] == '\t')) ++a;
      if (a >= tag.size()) break;
      auto eq = tag.find('=', a);
      if (eq == std::string_view::npos) throw ParseError("attribute without value in <" + name + ">");
      std::string key(io::trim(tag.substr(a, eq - a)));
      auto q1 = tag.find('"', eq);
      auto q2 = q1 == std::string_view::npos ? q1 : tag.find('"', q1 + 1);
      if (q2 == std::string_view::npos) throw ParseError("unquoted attribute '" + key + "' in <" + name + ">");
      std::string value = unescape(tag.substr(q1 + 1, q2 - q1 - 1));
      if (key == "translation") {
        translation = value;
        have_translation = true;
      } else if (key == "prob") {
        prob = value;
        have_prob = true;
      }
      a = q2 + 1;
    }
    if (!have_translation) throw ParseError("<" + name + "> lacks a translation attribute");

    std::string end_tag = "</" + name + ">";
    auto end = line.find(end_tag, close + 1);
    if (end == std::string_view::npos) throw ParseError("missing " + end_tag);

    ConstraintSpan span;
    span.mode = mode;
    span.start = out.tokens.size();
    append_text(line.substr(close + 1, end - close - 1));
    span.end = out.tokens.size();
    auto targets = split_alternatives(translation);
    std::vector<std::string> probs = have_prob ? split_alternatives(prob) : std::vector<std::string>{};
    if (have_prob && probs.size() != targets.size()) {
      throw ParseError(fmt::format("{} translations but {} probabilities", targets.size(), probs.size()));
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
      SpanCandidate c;
      c.target = tokenize(targets[k], norm);
      c.prob = have_prob ? io::parse_double(probs[k]) : 1.0;
      if (c.target.empty()) throw ParseError("empty translation candidate");
      span.candidates.push_back(std::move(c));
    }
    if (span.start == span.end) throw ParseError("<" + name + "> encloses no tokens");
    out.spans.push_back(std::move(span));
    pos = end + end_tag.size();
  }
  out.validate();
  return out;
}

}  // namespace termforge
