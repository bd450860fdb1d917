#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgdec {

struct SourceLoc {
  int line = 1;
  int column = 1;
};

std::string to_string(const SourceLoc& loc);

// Malformed S-expression text or a DSL/data file that does not follow its
// format. The message already carries the location.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, SourceLoc loc);
  SourceLoc loc() const { return loc_; }

 private:
  SourceLoc loc_;
};

// Immutable S-expression value. Lists share their element storage, so copies
// are cheap and sub-trees can be reused across values.
//
// `eval` is the `#( ... )` form used by logical-form templates; it prints back
// as `#(...)` and otherwise behaves like a list.
class Sexpr {
 public:
  enum class Kind { symbol, string, list, eval };

  Sexpr() : Sexpr(Kind::list, {}, {}, {}) {}

  static Sexpr symbol(std::string text, SourceLoc loc = {});
  static Sexpr string(std::string text, SourceLoc loc = {});
  static Sexpr list(std::vector<Sexpr> items, SourceLoc loc = {});
  static Sexpr eval(std::vector<Sexpr> items, SourceLoc loc = {});

  Kind kind() const { return kind_; }
  bool is_symbol() const { return kind_ == Kind::symbol; }
  bool is_symbol(std::string_view name) const { return kind_ == Kind::symbol && text_ == name; }
  bool is_string() const { return kind_ == Kind::string; }
  bool is_atom() const { return is_symbol() || is_string(); }
  bool is_list() const { return kind_ == Kind::list; }
  bool is_eval() const { return kind_ == Kind::eval; }

  // Symbol name or string contents. Empty for lists.
  const std::string& text() const { return text_; }
  const std::vector<Sexpr>& items() const;
  std::size_t size() const { return items().size(); }
  const Sexpr& operator[](std::size_t i) const { return items()[i]; }

  SourceLoc loc() const { return loc_; }

  // Structural equality; source locations are ignored.
  bool operator==(const Sexpr& other) const;
  bool operator!=(const Sexpr& other) const { return !(*this == other); }

 private:
  Sexpr(Kind kind, std::string text, std::shared_ptr<const std::vector<Sexpr>> items, SourceLoc loc)
      : kind_(kind), text_(std::move(text)), items_(std::move(items)), loc_(loc) {}

  Kind kind_;
  std::string text_;
  std::shared_ptr<const std::vector<Sexpr>> items_;
  SourceLoc loc_;
};

// True when `text` can be printed as a bare symbol and read back unchanged.
bool is_valid_symbol(std::string_view text);

// Reads every top-level expression. `;` starts a comment that runs to the end
// of the line.
std::vector<Sexpr> read_all(std::string_view text);

// Reads exactly one expression; trailing non-whitespace is an error.
Sexpr read_one(std::string_view text);

// Canonical printer: single spaces between elements, no trailing whitespace,
// strings quoted with `\"`, `\\`, `\n` and `\t` escapes.
std::string print(const Sexpr& expr);

std::string quote_string(std::string_view text);

}  // namespace cgdec
