#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgdec/sexpr.hpp"
#include "cgdec/vocab.hpp"

namespace cgdec {

using TypeId = std::int32_t;
using ClassId = std::int32_t;
using ActionId = std::int32_t;

// Attached to a parameter position, never to a type declaration.
enum class Modifier : std::uint8_t { none, optional, repeated };

std::string_view to_string(Modifier m);

class UnknownTypeError : public std::invalid_argument {
 public:
  explicit UnknownTypeError(const std::string& name) : std::invalid_argument("unknown type '" + name + "'") {}
};

class CyclicHierarchyError : public std::invalid_argument {
 public:
  CyclicHierarchyError(const std::string& name, std::int32_t type)
      : std::invalid_argument("cyclic type hierarchy through '" + name + "'"), type_(type) {}
  std::int32_t type() const { return type_; }

 private:
  std::int32_t type_;
};

// Sub-type DAG. A type may have several super-types. After finalize() the
// reflexive-transitive closure answers is_subtype in O(1).
class TypeHierarchy {
 public:
  TypeId add_type(const std::string& name);  // idempotent
  // Edge sub -> super. Throws if either id is unknown.
  void add_edge(TypeId sub, TypeId super);
  // Throws std::invalid_argument naming a type on a cycle.
  void finalize();

  std::size_t size() const { return names_.size(); }
  std::optional<TypeId> find(std::string_view name) const;
  TypeId require(std::string_view name) const;  // throws UnknownTypeError
  const std::string& name(TypeId t) const { return names_.at(static_cast<std::size_t>(t)); }
  const std::vector<std::pair<TypeId, TypeId>>& edges() const { return edges_; }
  std::vector<TypeId> roots() const;
  std::vector<TypeId> direct_supertypes(TypeId t) const;

  bool is_subtype(TypeId sub, TypeId super) const {
    const std::size_t n = names_.size();
    const std::size_t bit = static_cast<std::size_t>(sub) * n + static_cast<std::size_t>(super);
    return (closure_[bit >> 6] >> (bit & 63)) & 1u;
  }
  bool is_subtype(std::string_view sub, std::string_view super) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::pair<TypeId, TypeId>> edges_;
  std::vector<std::uint64_t> closure_;
};

struct ParamType {
  TypeId type;
  Modifier modifier = Modifier::none;
};

enum class TemplateKind { default_form, visual };

struct NodeClass {
  std::string name;
  std::vector<TypeId> return_types;  // sorted, non-empty
  std::vector<ParamType> params;
  Sexpr default_template;
  std::optional<Sexpr> visual_template;
  bool has_candidates = false;
  // Synthetic super -> sub rule, only present when sub-type inference is off.
  bool is_conversion = false;
  SourceLoc loc;

  std::size_t arity() const { return params.size(); }
  bool has_rest() const { return !params.empty() && params.back().modifier == Modifier::repeated; }
  const Sexpr& template_for(TemplateKind kind) const {
    return kind == TemplateKind::visual && visual_template ? *visual_template : default_template;
  }
};

enum class ActionKind : std::uint8_t { rule, nl_token, reduce };

struct Action {
  ActionKind kind;
  ActionId id;
  ClassId node_class = -1;  // rule actions
  TokenId token = -1;       // nl_token actions
  std::int32_t return_set = -1;  // nl_token actions: index into the interned return sets
};

struct NlTokenPattern {
  std::string regex;  // ECMAScript, must match the whole token
  std::vector<TypeId> types;
};

struct GrammarOptions {
  // When false, compatibility is exact type equality and one conversion rule
  // <super> -> <sub> is materialized per hierarchy edge.
  bool subtype_inference = true;
};

// Immutable after construction.
class Grammar {
 public:
  const TypeHierarchy& hierarchy() const { return hierarchy_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  TypeId root_type() const { return root_type_; }
  bool subtype_inference() const { return options_.subtype_inference; }

  const std::vector<NodeClass>& node_classes() const { return classes_; }
  const NodeClass& node_class(ClassId c) const { return classes_.at(static_cast<std::size_t>(c)); }
  std::optional<ClassId> find_class(std::string_view name) const;

  const std::vector<Action>& actions() const { return actions_; }
  const Action& action(ActionId a) const { return actions_[static_cast<std::size_t>(a)]; }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_rule_actions() const { return static_cast<std::size_t>(first_token_action_); }
  std::size_t num_token_actions() const { return vocab_.size(); }
  ActionId first_token_action() const { return first_token_action_; }
  ActionId reduce_action() const { return reduce_action_; }
  ActionId token_action(TokenId t) const { return first_token_action_ + t; }
  std::optional<ActionId> rule_action(std::string_view class_name) const;
  // Rule action id for a class; classes and rule actions share indices.
  ActionId class_action(ClassId c) const { return c; }

  // Left-hand side of an action (its return-type set). Empty for reduce.
  std::span<const TypeId> lhs(ActionId a) const;
  // Union of the return sets of every nl-token action.
  std::span<const TypeId> universal_token_types() const { return universal_token_types_; }
  const std::vector<TypeId>& token_return_types(TokenId t) const;
  const std::vector<std::vector<TypeId>>& token_return_sets() const { return token_return_sets_; }
  const std::vector<TypeId>& token_base_types() const { return token_base_types_; }
  const std::vector<NlTokenPattern>& token_patterns() const { return token_patterns_; }

  // Whether some member of lhs(a) may fill a non-terminal of type `nt`. Always
  // false for reduce; reduce legality is decided at the IR level.
  bool compatible(ActionId a, TypeId nt) const;
  // Like compatible(), but every nl-token action is treated as returning the
  // universal token union.
  bool compatible_unified(ActionId a, TypeId nt) const;
  bool type_fits(TypeId produced, TypeId nt) const {
    return options_.subtype_inference ? hierarchy_.is_subtype(produced, nt) : produced == nt;
  }

  std::string action_label(ActionId a) const;
  const std::vector<std::string>& lints() const { return lints_; }

 private:
  friend Grammar parse_grammar(std::string_view, Vocabulary, GrammarOptions);

  void build_inventory();
  void compute_lints();

  GrammarOptions options_;
  TypeHierarchy hierarchy_;
  Vocabulary vocab_;
  TypeId root_type_ = -1;
  std::vector<NodeClass> classes_;
  std::vector<TypeId> token_base_types_;
  std::vector<NlTokenPattern> token_patterns_;
  std::vector<std::vector<TypeId>> token_return_sets_;
  std::vector<std::int32_t> token_set_of_;
  std::vector<TypeId> universal_token_types_;
  std::vector<Action> actions_;
  ActionId first_token_action_ = 0;
  ActionId reduce_action_ = 0;
  std::vector<std::string> lints_;
};

// Parses the grammar DSL (see docs/formats.md). Throws ParseError with the
// source location of the offending form.
Grammar parse_grammar(std::string_view dsl_text, Vocabulary vocabulary, GrammarOptions options = {});

}  // namespace cgdec
