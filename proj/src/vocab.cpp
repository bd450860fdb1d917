#include "cgdec/vocab.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cgdec/sexpr.hpp"

namespace cgdec {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw std::invalid_argument("empty token at id " + std::to_string(i));
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted)
      throw std::invalid_argument("duplicate token '" + tokens_[i] + "' at ids " +
                                  std::to_string(it->second) + " and " + std::to_string(i));
  }
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  int line = 1;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    if (raw.empty()) throw ParseError("empty vocabulary line", {line, 1});
    try {
      tokens.push_back(unescape_token(raw));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), {line, 1});
    }
    pos = end + 1;
    ++line;
  }
  try {
    return Vocabulary(std::move(tokens));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), {line, 1});
  }
}

Vocabulary Vocabulary::load(const std::string& path) { return parse(read_file(path)); }

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += escape_token(t);
    out.push_back('\n');
  }
  return out;
}

std::string escape_token(std::string_view token) {
  std::string out;
  for (char c : token) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_token(std::string_view line) {
  std::string out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r')
      throw std::invalid_argument("raw whitespace in token; use \\s, \\t or \\r");
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (++i >= line.size()) throw std::invalid_argument("dangling backslash");
    switch (line[i]) {
      case '\\': out.push_back('\\'); break;
      case 's': out.push_back(' '); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: throw std::invalid_argument(std::string("unknown escape \\") + line[i]);
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cgdec
