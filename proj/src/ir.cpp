#include "cgdec/ir.hpp"

#include <algorithm>

namespace cgdec {

namespace {

const ParamType& current_param(const Grammar& g, const Frame& f, ParamType& root_slot) {
  if (f.node_class < 0) {
    root_slot = ParamType{g.root_type(), Modifier::none};
    return root_slot;
  }
  return g.node_class(f.node_class).params[f.param_index];
}

std::size_t frame_arity(const Grammar& g, const Frame& f) {
  return f.node_class < 0 ? 1 : g.node_class(f.node_class).arity();
}

std::vector<TreePtr> to_vector(const ConsList<TreePtr>& list, std::size_t n) {
  std::vector<TreePtr> out(n);
  std::size_t i = n;
  for (const ConsCell<TreePtr>* c = list.get(); c; c = c->tail.get()) out[--i] = c->head;
  return out;
}

Sexpr nonterminal_symbol(const Grammar& g, const ParamType& p) {
  return Sexpr::symbol("<" + g.hierarchy().name(p.type) + ">" + std::string(to_string(p.modifier)));
}

}  // namespace

std::vector<TreePtr> OpenNode::children() const { return to_vector(frame_->children, frame_->num_children); }

std::vector<TokenId> OpenNode::token_children(const Grammar& g) const {
  std::vector<TokenId> out;
  for (const auto& t : children()) {
    const Action& a = g.action(t->action);
    if (a.kind == ActionKind::nl_token) out.push_back(a.token);
  }
  return out;
}

IRState IRState::initial(const Grammar& g) {
  IRState s(&g);
  s.top_ = std::make_shared<const Frame>();
  return s;
}

std::optional<NonTerminal> IRState::leftmost_nonterminal() const {
  if (!top_) return std::nullopt;
  ParamType root_slot;
  const ParamType& p = current_param(*grammar_, *top_, root_slot);
  NonTerminal nt;
  nt.type = p.type;
  nt.modifier = p.modifier;
  nt.owner = top_->node_class;
  nt.position = top_->param_index;
  if (p.modifier == Modifier::optional) {
    nt.reducible = true;
  } else if (p.modifier == Modifier::repeated) {
    nt.reducible = top_->filled_in_param > 0 || !grammar_->node_class(top_->node_class).has_candidates;
  }
  return nt;
}

OpenNode IRState::parent_of_lmnt() const {
  if (!top_) throw std::logic_error("parent_of_lmnt on a complete state");
  return OpenNode(top_.get());
}

std::optional<ActionId> IRState::last_action() const {
  if (!history_) return std::nullopt;
  return history_->head;
}

std::vector<ActionId> IRState::actions() const {
  std::vector<ActionId> out(length_);
  std::size_t i = length_;
  for (const ConsCell<ActionId>* c = history_.get(); c; c = c->tail.get()) out[--i] = c->head;
  return out;
}

IRState IRState::apply(ActionId a, ApplyCheck check) const {
  const Grammar& g = *grammar_;
  if (!top_) throw IrError("cannot apply an action to a complete state");
  if (a < 0 || static_cast<std::size_t>(a) >= g.num_actions())
    throw IrError("action id " + std::to_string(a) + " out of range");
  const NonTerminal nt = *leftmost_nonterminal();
  const Action& act = g.action(a);

  IRState next(grammar_);
  next.history_ = std::make_shared<const ConsCell<ActionId>>(ConsCell<ActionId>{a, history_});
  next.length_ = length_ + 1;

  // Frame whose current position is being edited, plus the tree to attach
  // there (null when the edit is a reduce or opens a new node).
  Frame f = *top_;
  TreePtr attach;

  if (act.kind == ActionKind::reduce) {
    if (nt.modifier == Modifier::optional) {
      ++f.param_index;
      f.filled_in_param = 0;
    } else if (nt.modifier == Modifier::repeated) {
      if (!nt.reducible && check != ApplyCheck::none)
        throw IrError("reduce needs at least one child at a candidate-bearing repeated position");
      f.param_index = static_cast<std::uint32_t>(frame_arity(g, f));
    } else {
      if (check != ApplyCheck::none) throw IrError("reduce at a mandatory position <" + g.hierarchy().name(nt.type) + ">");
      f.param_index = static_cast<std::uint32_t>(frame_arity(g, f));
    }
  } else {
    if (check == ApplyCheck::typed && !g.compatible(a, nt.type))
      throw IrError("action '" + g.action_label(a) + "' is not compatible with <" + g.hierarchy().name(nt.type) + ">");
    if (check == ApplyCheck::unified && !g.compatible_unified(a, nt.type))
      throw IrError("action '" + g.action_label(a) + "' is not compatible with <" + g.hierarchy().name(nt.type) + ">");
    if (act.kind == ActionKind::rule && g.node_class(act.node_class).arity() > 0) {
      Frame child;
      child.node_class = act.node_class;
      child.parent = top_;
      next.top_ = std::make_shared<const Frame>(std::move(child));
      return next;
    }
    attach = std::make_shared<const Tree>(Tree{a, {}});
  }

  // Attach and auto-close, cascading towards the root holder.
  for (;;) {
    if (attach) {
      f.children = std::make_shared<const ConsCell<TreePtr>>(ConsCell<TreePtr>{attach, f.children});
      ++f.num_children;
      ParamType root_slot;
      if (current_param(g, f, root_slot).modifier == Modifier::repeated) {
        ++f.filled_in_param;
      } else {
        ++f.param_index;
        f.filled_in_param = 0;
      }
      attach.reset();
    }
    if (f.param_index < frame_arity(g, f)) {
      next.top_ = std::make_shared<const Frame>(std::move(f));
      return next;
    }
    if (f.node_class < 0) {
      next.result_ = f.children ? f.children->head : nullptr;
      next.top_.reset();
      return next;
    }
    attach = std::make_shared<const Tree>(Tree{g.class_action(f.node_class), to_vector(f.children, f.num_children)});
    Frame parent = *f.parent;
    f = std::move(parent);
  }
}

Sexpr tree_to_ir(const Grammar& g, const Tree& tree) {
  const Action& a = g.action(tree.action);
  if (a.kind == ActionKind::nl_token) return Sexpr::string(g.vocabulary().token(a.token));
  const NodeClass& c = g.node_class(a.node_class);
  if (c.arity() == 0) return Sexpr::symbol(c.name);
  std::vector<Sexpr> items{Sexpr::symbol(c.name)};
  for (const auto& child : tree.children) items.push_back(tree_to_ir(g, *child));
  return Sexpr::list(std::move(items));
}

std::string IRState::serialize() const {
  const Grammar& g = *grammar_;
  if (!top_) return result_ ? print(tree_to_ir(g, *result_)) : std::string();

  // Build from the innermost open node outwards: each frame's items are its
  // completed children, then the inner frame (if any), then pending
  // non-terminals.
  std::optional<Sexpr> inner;
  for (const Frame* f = top_.get(); f; f = f->parent.get()) {
    std::vector<Sexpr> items;
    if (f->node_class >= 0) items.push_back(Sexpr::symbol(g.node_class(f->node_class).name));
    for (const auto& child : to_vector(f->children, f->num_children)) items.push_back(tree_to_ir(g, *child));
    ParamType root_slot;
    const std::size_t arity = frame_arity(g, *f);
    std::size_t from = f->param_index;
    if (inner) {
      items.push_back(*inner);
      if (current_param(g, *f, root_slot).modifier != Modifier::repeated) ++from;
    }
    for (std::size_t i = from; i < arity; ++i) {
      Frame probe = *f;
      probe.param_index = static_cast<std::uint32_t>(i);
      items.push_back(nonterminal_symbol(g, current_param(g, probe, root_slot)));
    }
    if (f->node_class < 0) {
      return items.empty() ? std::string() : print(items.front());
    }
    inner = Sexpr::list(std::move(items));
  }
  return {};
}

bool IRState::operator==(const IRState& other) const {
  return grammar_ == other.grammar_ && length_ == other.length_ && actions() == other.actions() &&
         serialize() == other.serialize();
}

IRState replay(const Grammar& g, const std::vector<ActionId>& actions, ApplyCheck check) {
  IRState s = IRState::initial(g);
  for (ActionId a : actions) s = s.apply(a, check);
  return s;
}

}  // namespace cgdec
