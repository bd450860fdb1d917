#include "cgdec/sexpr.hpp"

#include <cctype>

namespace cgdec {

std::string to_string(const SourceLoc& loc) {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

ParseError::ParseError(const std::string& what, SourceLoc loc)
    : std::runtime_error(to_string(loc) + ": " + what), loc_(loc) {}

namespace {

const std::vector<Sexpr>& empty_items() {
  static const std::vector<Sexpr> empty;
  return empty;
}

bool is_delimiter(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' || c == ';';
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_blank();
    return pos_ >= text_.size();
  }

  Sexpr read() {
    skip_blank();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", loc_);
    SourceLoc start = loc_;
    char c = text_[pos_];
    if (c == '(') {
      advance();
      return Sexpr::list(read_items(start), start);
    }
    if (c == '#' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '(') {
      advance();
      advance();
      return Sexpr::eval(read_items(start), start);
    }
    if (c == ')') throw ParseError("unbalanced ')'", start);
    if (c == '"') return read_string(start);
    std::string sym;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) {
      sym.push_back(text_[pos_]);
      advance();
    }
    return Sexpr::symbol(std::move(sym), start);
  }

  SourceLoc loc() const { return loc_; }

 private:
  std::vector<Sexpr> read_items(SourceLoc open) {
    std::vector<Sexpr> items;
    for (;;) {
      skip_blank();
      if (pos_ >= text_.size()) throw ParseError("unclosed '(' opened here", open);
      if (text_[pos_] == ')') {
        advance();
        return items;
      }
      items.push_back(read());
    }
  }

  Sexpr read_string(SourceLoc start) {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= text_.size()) throw ParseError("unterminated string literal", start);
      char c = text_[pos_];
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) throw ParseError("unterminated escape", start);
        char e = text_[pos_];
        SourceLoc at = loc_;
        advance();
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: throw ParseError(std::string("unknown escape '\\") + e + "'", at);
        }
        continue;
      }
      out.push_back(c);
    }
    return Sexpr::string(std::move(out), start);
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++loc_.line;
      loc_.column = 1;
    } else {
      ++loc_.column;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  SourceLoc loc_;
};

void print_into(const Sexpr& e, std::string& out) {
  switch (e.kind()) {
    case Sexpr::Kind::symbol: out += e.text(); return;
    case Sexpr::Kind::string: out += quote_string(e.text()); return;
    case Sexpr::Kind::list:
    case Sexpr::Kind::eval: {
      out += e.is_eval() ? "#(" : "(";
      bool first = true;
      for (const auto& item : e.items()) {
        if (!first) out.push_back(' ');
        first = false;
        print_into(item, out);
      }
      out.push_back(')');
      return;
    }
  }
}

}  // namespace

Sexpr Sexpr::symbol(std::string text, SourceLoc loc) {
  if (!is_valid_symbol(text)) throw std::invalid_argument("not a printable symbol: '" + text + "'");
  return Sexpr(Kind::symbol, std::move(text), nullptr, loc);
}

Sexpr Sexpr::string(std::string text, SourceLoc loc) {
  return Sexpr(Kind::string, std::move(text), nullptr, loc);
}

Sexpr Sexpr::list(std::vector<Sexpr> items, SourceLoc loc) {
  return Sexpr(Kind::list, {}, std::make_shared<const std::vector<Sexpr>>(std::move(items)), loc);
}

Sexpr Sexpr::eval(std::vector<Sexpr> items, SourceLoc loc) {
  return Sexpr(Kind::eval, {}, std::make_shared<const std::vector<Sexpr>>(std::move(items)), loc);
}

const std::vector<Sexpr>& Sexpr::items() const { return items_ ? *items_ : empty_items(); }

bool Sexpr::operator==(const Sexpr& other) const {
  if (kind_ != other.kind_) return false;
  if (kind_ == Kind::symbol || kind_ == Kind::string) return text_ == other.text_;
  if (items_ == other.items_) return true;
  return items() == other.items();
}

bool is_valid_symbol(std::string_view text) {
  if (text.empty()) return false;
  if (text.size() >= 2 && text[0] == '#' && text[1] == '(') return false;
  for (char c : text)
    if (is_delimiter(c)) return false;
  return true;
}

std::vector<Sexpr> read_all(std::string_view text) {
  Reader reader(text);
  std::vector<Sexpr> out;
  while (!reader.at_end()) out.push_back(reader.read());
  return out;
}

Sexpr read_one(std::string_view text) {
  Reader reader(text);
  if (reader.at_end()) throw ParseError("expected an expression", reader.loc());
  Sexpr e = reader.read();
  if (!reader.at_end()) throw ParseError("trailing input after expression", reader.loc());
  return e;
}

std::string print(const Sexpr& expr) {
  std::string out;
  print_into(expr, out);
  return out;
}

std::string quote_string(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace cgdec
