#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cgdec {

using TokenId = std::int32_t;

// Opaque id <-> token-string table. Ids are dense, in file order.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws std::invalid_argument on empty or duplicate tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  // One token per line; line n (0-based) is token id n. See docs/formats.md.
  static Vocabulary parse(std::string_view text);
  static Vocabulary load(const std::string& path);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::string serialize() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// `\\`, `\s` (space), `\t`, `\n`, `\r`. Every whitespace byte is escaped.
std::string escape_token(std::string_view token);
// Throws std::invalid_argument on a bad escape or raw whitespace.
std::string unescape_token(std::string_view line);

std::string read_file(const std::string& path);

}  // namespace cgdec
