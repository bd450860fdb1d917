#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cgdec/sexpr.hpp"

namespace cgdec {

struct Entity {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;  // in file order

  std::optional<std::string> attr(std::string_view key) const;
};

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
};

// Entities are keyed by name; a name may be declared once.
class MiniKB {
 public:
  // Records: (entity "name" (attr "key" "value") ...) and (triple "s" "r" "o").
  static MiniKB parse(std::string_view text);
  static MiniKB load(const std::string& path);

  void add_entity(Entity e);
  // Both endpoints must already exist.
  void add_triple(Triple t);

  const Entity* find(std::string_view name) const;
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Triple>& triples() const { return triples_; }

 private:
  std::vector<Entity> entities_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<Triple> triples_;
};

// Value of a logical form. Sets are ordered, so equality ignores the order in
// which members were produced. Numbers compare with a 1e-9 absolute tolerance.
class Denotation {
 public:
  using Set = std::set<std::string>;
  using Value = std::variant<std::string, double, Set, bool>;

  Denotation() : value_(Set{}) {}
  explicit Denotation(Value v) : value_(std::move(v)) {}
  static Denotation string(std::string s) { return Denotation(Value(std::move(s))); }
  static Denotation number(double d) { return Denotation(Value(d)); }
  static Denotation set(Set s) { return Denotation(Value(std::move(s))); }
  static Denotation boolean(bool b) { return Denotation(Value(b)); }

  const Value& value() const { return value_; }
  bool is_set() const { return std::holds_alternative<Set>(value_); }
  bool is_number() const { return std::holds_alternative<double>(value_); }

  // (number 3) (string "x") (set "a" "b") (bool true)
  static Denotation from_sexpr(const Sexpr& e);
  Sexpr to_sexpr() const;

  bool operator==(const Denotation& other) const;
  bool operator!=(const Denotation& other) const { return !(*this == other); }

 private:
  Value value_;
};

// A malformed logical form: unknown operator, wrong arity or argument kind.
class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluates a logical form built from the default templates.
//
//   (find "n")              entities whose name or kind equals n
//   (count S ...)           size of the union of the sets
//   (filter-num S "k" op "v")  members whose numeric attribute k compares
//                           with v; op is > < = >= <=
//   (attr "k" S)            sum of numeric attribute k over S
//   (relate S "r" forward|backward)  objects or subjects of r
//   (union S ...) (intersect S S) (exists S)
//   "text" and numeric symbols evaluate to themselves
//
// Unknown names and relations give the empty set.
Denotation execute(const Sexpr& lf, const MiniKB& kb);

std::string to_string(const Denotation& d);

}  // namespace cgdec
