#include "cgdec/kb.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "cgdec/vocab.hpp"

namespace cgdec {

namespace {

[[noreturn]] void bad(const Sexpr& at, const std::string& what) { throw ParseError(what, at.loc()); }

const std::string& atom_text(const Sexpr& e, const char* what) {
  if (!e.is_atom()) bad(e, std::string("expected ") + what);
  return e.text();
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest form that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

[[noreturn]] void fail(const Sexpr& at, const std::string& what) { throw ExecutionError(what + " in " + print(at)); }

class Executor {
 public:
  explicit Executor(const MiniKB& kb) : kb_(kb) {}

  Denotation eval(const Sexpr& e) const {
    if (e.is_string()) return Denotation::string(e.text());
    if (e.is_symbol()) {
      if (e.text() == "true") return Denotation::boolean(true);
      if (e.text() == "false") return Denotation::boolean(false);
      if (auto v = parse_number(e.text())) return Denotation::number(*v);
      return Denotation::string(e.text());
    }
    if (e.size() == 0 || !e[0].is_symbol()) fail(e, "expected (operator ...)");
    const std::string& op = e[0].text();
    if (op == "find") return find(e);
    if (op == "count") {
      Denotation::Set all;
      for (std::size_t i = 1; i < e.size(); ++i) {
        Denotation::Set s = as_set(e[i]);
        all.insert(s.begin(), s.end());
      }
      if (e.size() < 2) fail(e, "count needs at least one set");
      return Denotation::number(static_cast<double>(all.size()));
    }
    if (op == "union") {
      Denotation::Set all;
      for (std::size_t i = 1; i < e.size(); ++i) {
        Denotation::Set s = as_set(e[i]);
        all.insert(s.begin(), s.end());
      }
      return Denotation::set(std::move(all));
    }
    if (op == "intersect") {
      arity(e, 2);
      Denotation::Set a = as_set(e[1]), b = as_set(e[2]), out;
      for (const auto& x : a)
        if (b.count(x)) out.insert(x);
      return Denotation::set(std::move(out));
    }
    if (op == "exists") {
      arity(e, 1);
      return Denotation::boolean(!as_set(e[1]).empty());
    }
    if (op == "filter-num") return filter_num(e);
    if (op == "attr") {
      arity(e, 2);
      const std::string key = as_text(e[1]);
      double sum = 0.0;
      for (const auto& name : as_set(e[2])) {
        const Entity* ent = kb_.find(name);
        if (!ent) continue;
        if (auto v = ent->attr(key))
          if (auto num = parse_number(*v)) sum += *num;
      }
      return Denotation::number(sum);
    }
    if (op == "relate") {
      arity(e, 3);
      Denotation::Set from = as_set(e[1]);
      const std::string rel = as_text(e[2]);
      const std::string dir = as_text(e[3]);
      if (dir != "forward" && dir != "backward") fail(e, "relate direction must be forward or backward");
      Denotation::Set out;
      for (const auto& t : kb_.triples()) {
        if (t.relation != rel) continue;
        if (dir == "forward" && from.count(t.subject)) out.insert(t.object);
        if (dir == "backward" && from.count(t.object)) out.insert(t.subject);
      }
      return Denotation::set(std::move(out));
    }
    fail(e, "unknown operator '" + op + "'");
  }

 private:
  void arity(const Sexpr& e, std::size_t n) const {
    if (e.size() != n + 1) fail(e, "'" + e[0].text() + "' takes " + std::to_string(n) + " arguments");
  }

  Denotation::Set as_set(const Sexpr& e) const {
    Denotation d = eval(e);
    if (!d.is_set()) fail(e, "expected a set");
    return std::get<Denotation::Set>(d.value());
  }

  std::string as_text(const Sexpr& e) const {
    if (!e.is_atom()) fail(e, "expected a string or symbol");
    return e.text();
  }

  Denotation find(const Sexpr& e) const {
    arity(e, 1);
    const std::string name = as_text(e[1]);
    Denotation::Set out;
    for (const auto& ent : kb_.entities()) {
      if (ent.name == name || ent.attr("kind") == name) out.insert(ent.name);
    }
    return Denotation::set(std::move(out));
  }

  Denotation filter_num(const Sexpr& e) const {
    arity(e, 4);
    Denotation::Set in = as_set(e[1]);
    const std::string key = as_text(e[2]);
    const std::string op = as_text(e[3]);
    if (op != ">" && op != "<" && op != "=" && op != ">=" && op != "<=") fail(e, "unknown comparison '" + op + "'");
    Denotation::Set out;
    auto bound = parse_number(as_text(e[4]));
    if (!bound) return Denotation::set(std::move(out));
    for (const auto& name : in) {
      const Entity* ent = kb_.find(name);
      if (!ent) continue;
      auto raw = ent->attr(key);
      if (!raw) continue;
      auto v = parse_number(*raw);
      if (!v) continue;
      const bool keep = op == ">"    ? *v > *bound
                        : op == "<"  ? *v < *bound
                        : op == "="  ? *v == *bound
                        : op == ">=" ? *v >= *bound
                                     : *v <= *bound;
      if (keep) out.insert(name);
    }
    return Denotation::set(std::move(out));
  }

  const MiniKB& kb_;
};

}  // namespace

std::optional<std::string> Entity::attr(std::string_view key) const {
  for (const auto& [k, v] : attrs)
    if (k == key) return v;
  return std::nullopt;
}

void MiniKB::add_entity(Entity e) {
  if (index_.count(e.name)) throw std::invalid_argument("duplicate entity '" + e.name + "'");
  index_.emplace(e.name, entities_.size());
  entities_.push_back(std::move(e));
}

void MiniKB::add_triple(Triple t) {
  if (!find(t.subject)) throw std::invalid_argument("triple subject '" + t.subject + "' is not an entity");
  if (!find(t.object)) throw std::invalid_argument("triple object '" + t.object + "' is not an entity");
  triples_.push_back(std::move(t));
}

const Entity* MiniKB::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entities_[it->second];
}

MiniKB MiniKB::parse(std::string_view text) {
  MiniKB kb;
  for (const auto& rec : read_all(text)) {
    if (!rec.is_list() || rec.size() == 0 || !rec[0].is_symbol()) bad(rec, "expected (entity ...) or (triple ...)");
    if (rec[0].text() == "entity") {
      if (rec.size() < 2) bad(rec, "entity needs a name");
      Entity e;
      e.name = atom_text(rec[1], "entity name");
      for (std::size_t i = 2; i < rec.size(); ++i) {
        const Sexpr& a = rec[i];
        if (!a.is_list() || a.size() != 3 || !a[0].is_symbol("attr")) bad(a, "expected (attr <key> <value>)");
        e.attrs.emplace_back(atom_text(a[1], "attribute key"), atom_text(a[2], "attribute value"));
      }
      try {
        kb.add_entity(std::move(e));
      } catch (const std::invalid_argument& ex) {
        bad(rec, ex.what());
      }
    } else if (rec[0].text() == "triple") {
      if (rec.size() != 4) bad(rec, "expected (triple <s> <r> <o>)");
      try {
        kb.add_triple(Triple{atom_text(rec[1], "subject"), atom_text(rec[2], "relation"), atom_text(rec[3], "object")});
      } catch (const std::invalid_argument& ex) {
        bad(rec, ex.what());
      }
    } else {
      bad(rec[0], "unknown record '" + rec[0].text() + "'");
    }
  }
  return kb;
}

MiniKB MiniKB::load(const std::string& path) { return parse(read_file(path)); }

Denotation Denotation::from_sexpr(const Sexpr& e) {
  if (!e.is_list() || e.size() == 0 || !e[0].is_symbol()) bad(e, "expected (number ..), (string ..), (set ..) or (bool ..)");
  const std::string& kind = e[0].text();
  if (kind == "set") {
    Set s;
    for (std::size_t i = 1; i < e.size(); ++i) s.insert(atom_text(e[i], "set member"));
    return Denotation::set(std::move(s));
  }
  if (e.size() != 2) bad(e, "'" + kind + "' takes one value");
  if (kind == "number") {
    auto v = parse_number(atom_text(e[1], "number"));
    if (!v) bad(e[1], "not a number");
    return Denotation::number(*v);
  }
  if (kind == "string") return Denotation::string(atom_text(e[1], "string"));
  if (kind == "bool") {
    if (e[1].is_symbol("true")) return Denotation::boolean(true);
    if (e[1].is_symbol("false")) return Denotation::boolean(false);
    bad(e[1], "expected true or false");
  }
  bad(e[0], "unknown denotation kind '" + kind + "'");
}

Sexpr Denotation::to_sexpr() const {
  return std::visit(
      [](const auto& v) -> Sexpr {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return Sexpr::list({Sexpr::symbol("string"), Sexpr::string(v)});
        } else if constexpr (std::is_same_v<T, double>) {
          return Sexpr::list({Sexpr::symbol("number"), Sexpr::symbol(format_number(v))});
        } else if constexpr (std::is_same_v<T, bool>) {
          return Sexpr::list({Sexpr::symbol("bool"), Sexpr::symbol(v ? "true" : "false")});
        } else {
          std::vector<Sexpr> items{Sexpr::symbol("set")};
          for (const auto& m : v) items.push_back(Sexpr::string(m));
          return Sexpr::list(std::move(items));
        }
      },
      value_);
}

bool Denotation::operator==(const Denotation& other) const {
  if (value_.index() != other.value_.index()) return false;
  if (is_number()) return std::fabs(std::get<double>(value_) - std::get<double>(other.value_)) <= 1e-9;
  return value_ == other.value_;
}

Denotation execute(const Sexpr& lf, const MiniKB& kb) { return Executor(kb).eval(lf); }

std::string to_string(const Denotation& d) { return print(d.to_sexpr()); }

}  // namespace cgdec
