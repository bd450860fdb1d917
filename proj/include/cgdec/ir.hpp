#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgdec/grammar.hpp"

namespace cgdec {

// An action that cannot be applied to the current leftmost non-terminal.
class IrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Completed sub-expression. Shared between every state that contains it.
struct Tree {
  ActionId action;
  std::vector<std::shared_ptr<const Tree>> children;
};
using TreePtr = std::shared_ptr<const Tree>;

template <class T>
struct ConsCell {
  T head;
  std::shared_ptr<const ConsCell> tail;
};
template <class T>
using ConsList = std::shared_ptr<const ConsCell<T>>;

// An open node: a node class whose parameter list is still being filled.
// Frames form a persistent linked list from the innermost open node down to
// the synthetic root holder, so successors share every frame they do not
// touch.
struct Frame {
  ClassId node_class = -1;  // -1 for the root holder
  std::uint32_t param_index = 0;
  std::uint32_t filled_in_param = 0;  // children placed at a repeated position
  std::uint32_t num_children = 0;
  ConsList<TreePtr> children;  // most recent first
  std::shared_ptr<const Frame> parent;
};

struct NonTerminal {
  TypeId type;
  Modifier modifier = Modifier::none;
  // Reduce is legal here: optional positions, and repeated positions that
  // already hold a child or whose class has no candidate expressions.
  bool reducible = false;
  ClassId owner = -1;  // -1 for the root holder
  std::uint32_t position = 0;
};

// Read-only view of the open node that owns the leftmost non-terminal.
class OpenNode {
 public:
  explicit OpenNode(const Frame* frame) : frame_(frame) {}
  bool is_root() const { return frame_->node_class < 0; }
  ClassId node_class() const { return frame_->node_class; }
  std::size_t num_children() const { return frame_->num_children; }
  // Children in left-to-right order.
  std::vector<TreePtr> children() const;
  // Tokens of the nl-token children, left to right.
  std::vector<TokenId> token_children(const Grammar& g) const;

 private:
  const Frame* frame_;
};

// How strictly apply() checks an action against the leftmost non-terminal.
enum class ApplyCheck {
  typed,    // compatible(a, lmnt); reduce only where legal
  unified,  // nl-tokens checked against the universal token union
  none,     // anything goes; reduce at a mandatory position closes the node early
};

// Persistent partial intermediate representation. Values are immutable;
// apply() returns a new state that shares structure with this one.
class IRState {
 public:
  static IRState initial(const Grammar& g);

  const Grammar& grammar() const { return *grammar_; }
  bool is_complete() const { return top_ == nullptr; }
  std::optional<NonTerminal> leftmost_nonterminal() const;
  // Throws std::logic_error on a complete state.
  OpenNode parent_of_lmnt() const;

  // Throws IrError when the action is not applicable under `check`.
  IRState apply(ActionId a, ApplyCheck check = ApplyCheck::typed) const;

  std::size_t length() const { return length_; }
  std::optional<ActionId> last_action() const;
  std::vector<ActionId> actions() const;
  // Root expression of a complete state; null otherwise.
  const TreePtr& result() const { return result_; }
  const Frame* top_frame() const { return top_.get(); }

  // Canonical print of the partial IR: completed nodes, open nodes and the
  // pending non-terminals written as <type>, <type>? or <type>*.
  std::string serialize() const;

  bool operator==(const IRState& other) const;

 private:
  IRState(const Grammar* g) : grammar_(g) {}

  const Grammar* grammar_;
  std::shared_ptr<const Frame> top_;
  TreePtr result_;
  ConsList<ActionId> history_;
  std::size_t length_ = 0;
};

inline IRState initial_state(const Grammar& g) { return IRState::initial(g); }
inline IRState apply_action(const IRState& s, ActionId a) { return s.apply(a); }
inline std::optional<NonTerminal> leftmost_nonterminal(const IRState& s) { return s.leftmost_nonterminal(); }
inline OpenNode parent_of_lmnt(const IRState& s) { return s.parent_of_lmnt(); }
inline std::size_t action_sequence_length(const IRState& s) { return s.length(); }

// Replays a sequence from the initial state.
IRState replay(const Grammar& g, const std::vector<ActionId>& actions, ApplyCheck check = ApplyCheck::typed);

// IR print of a completed tree: (class child ...), bare class name for
// zero-parameter classes, nl-tokens as string literals.
Sexpr tree_to_ir(const Grammar& g, const Tree& tree);

}  // namespace cgdec
