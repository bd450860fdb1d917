#include "cgdec/constrain.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <string>

namespace cgdec {

ActionSet ActionSet::full(std::size_t universe) {
  ActionSet s(universe);
  for (std::size_t a = 0; a < universe; ++a) s.insert(static_cast<ActionId>(a));
  return s;
}

bool ActionSet::is_subset_of(const ActionSet& other) const {
  if (universe_ != other.universe_) return false;
  for (std::size_t w = 0; w < bits_.size(); ++w)
    if (bits_[w] & ~other.bits_[w]) return false;
  return true;
}

ActionSet ActionSet::complement() const {
  ActionSet out(universe_);
  for (std::size_t a = 0; a < universe_; ++a)
    if (!contains(static_cast<ActionId>(a))) out.insert(static_cast<ActionId>(a));
  return out;
}

std::vector<ActionId> ActionSet::members() const {
  std::vector<ActionId> out;
  out.reserve(count_);
  for_each([&](ActionId a) { out.push_back(a); });
  return out;
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::none: return "none";
    case Constraint::type_wu: return "type-wu";
    case Constraint::type: return "type";
    case Constraint::hybr: return "hybr";
  }
  return "?";
}

Constraint parse_constraint(std::string_view text) {
  if (text == "none") return Constraint::none;
  if (text == "type-wu") return Constraint::type_wu;
  if (text == "type") return Constraint::type;
  if (text == "hybr") return Constraint::hybr;
  throw std::invalid_argument("unknown constraint '" + std::string(text) + "' (expected none, type-wu, type or hybr)");
}

ActionConstraints::ActionConstraints(const Grammar& g, const CandidateIndex* candidates)
    : grammar_(&g), candidates_(candidates) {}

ActionSet ActionConstraints::act_none(const IRState&) const { return ActionSet::full(grammar_->num_actions()); }

ActionSet ActionConstraints::typed(const NonTerminal& nt, bool unified) const {
  const Grammar& g = *grammar_;
  ActionSet out(g.num_actions());
  for (ActionId a = 0; a < g.reduce_action(); ++a) {
    if (unified ? g.compatible_unified(a, nt.type) : g.compatible(a, nt.type)) out.insert(a);
  }
  if (nt.reducible) out.insert(g.reduce_action());
  return out;
}

ActionSet ActionConstraints::act_type(const IRState& s) const {
  auto nt = s.leftmost_nonterminal();
  if (!nt) throw std::logic_error("act_type on a complete state");
  return typed(*nt, false);
}

ActionSet ActionConstraints::act_type_wu(const IRState& s) const {
  auto nt = s.leftmost_nonterminal();
  if (!nt) throw std::logic_error("act_type_wu on a complete state");
  return typed(*nt, true);
}

bool ActionConstraints::has_cand_expr(const IRState& s) const {
  if (s.is_complete()) return false;
  const OpenNode parent = s.parent_of_lmnt();
  return !parent.is_root() && grammar_->node_class(parent.node_class()).has_candidates;
}

ActionSet ActionConstraints::act_cand(const IRState& s) const {
  if (!has_cand_expr(s)) throw std::logic_error("act_cand: parent of the lmnt has no candidate expressions");
  const Grammar& g = *grammar_;
  ActionSet out(g.num_actions());
  const OpenNode parent = s.parent_of_lmnt();
  const Trie* trie = candidates_ ? candidates_->trie_for(parent.node_class()) : nullptr;
  if (!trie) return out;
  const std::vector<TokenId> prefix = parent.token_children(g);
  auto node = trie->find(prefix);
  if (!node) return out;
  // A trie token whose return set does not fit the slot is still excluded.
  const NonTerminal nt = *s.leftmost_nonterminal();
  for (const auto& [tok, _] : trie->node(*node).children)
    if (g.compatible(g.token_action(tok), nt.type)) out.insert(g.token_action(tok));
  if (trie->node(*node).terminal && nt.reducible) out.insert(g.reduce_action());
  return out;
}

ActionSet ActionConstraints::act_hybr(const IRState& s) const {
  if (s.is_complete()) throw std::logic_error("act_hybr on a complete state");
  return has_cand_expr(s) ? act_cand(s) : act_type(s);
}

ActionSet ActionConstraints::valid_actions(const IRState& s, Constraint c) const {
  switch (c) {
    case Constraint::none: return act_none(s);
    case Constraint::type_wu: return act_type_wu(s);
    case Constraint::type: return act_type(s);
    case Constraint::hybr: return act_hybr(s);
  }
  throw std::logic_error("bad constraint");
}

MaskVector to_mask(const ActionSet& valid) {
  MaskVector m(valid.universe(), kMasked);
  valid.for_each([&](ActionId a) { m[static_cast<std::size_t>(a)] = 0.0f; });
  return m;
}

TypeKey type_key(const ActionConstraints& ac, const IRState& s, Constraint c) {
  if (!ac.is_type_keyed(s, c)) throw std::invalid_argument("state is not type-keyed under hybr");
  if (c == Constraint::none) return TypeKey{c, -1, Modifier::none, false};
  auto nt = s.leftmost_nonterminal();
  if (!nt) throw std::invalid_argument("complete state has no type key");
  // hybr on a non-candidate parent is act_type.
  const Constraint base = c == Constraint::hybr ? Constraint::type : c;
  return TypeKey{base, nt->type, nt->modifier, nt->reducible};
}

std::shared_ptr<const MaskCache::Entry> make_cache_entry(ActionSet valid) {
  auto e = std::make_shared<MaskCache::Entry>();
  e->mask = to_mask(valid);
  const bool polarity = validness_polarity(valid.size(), valid.universe());
  ActionSet listed = polarity ? valid : valid.complement();
  e->validness.polarity = polarity;
  e->validness.ids = std::make_shared<const std::vector<ActionId>>(listed.members());
  e->validness.set = std::make_shared<const ActionSet>(std::move(listed));
  e->valid = std::move(valid);
  return e;
}

std::shared_ptr<const MaskCache::Entry> MaskCache::find(const TypeKey& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<const MaskCache::Entry> MaskCache::insert(const TypeKey& key, std::shared_ptr<const Entry> entry) {
  std::unique_lock lock(mu_);
  auto [it, inserted] = entries_.emplace(key, std::move(entry));
  return it->second;
}

std::shared_ptr<const MaskCache::Entry> MaskCache::get_or_compute(const ActionConstraints& ac, const IRState& s,
                                                                  Constraint c) {
  const TypeKey key = type_key(ac, s, c);
  if (auto hit = find(key)) {
    ++hits_;
    return hit;
  }
  ++computations_;
  return insert(key, make_cache_entry(ac.valid_actions(s, c)));
}

std::size_t MaskCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void MaskCache::clear() {
  std::unique_lock lock(mu_);
  entries_.clear();
  computations_ = 0;
  hits_ = 0;
}

MaskVector compute_mask_vector(const ActionConstraints& ac, const IRState& s, Constraint c) {
  return to_mask(ac.valid_actions(s, c));
}

const MaskVector& mask_vector(const ActionConstraints& ac, const IRState& s, MaskCache& cache, Constraint c) {
  return cache.get_or_compute(ac, s, c)->mask;
}

bool MaskTensor::operator==(const MaskTensor& o) const {
  // Exact comparison; -inf == -inf holds for floats.
  return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
}

MaskTensor mask_tensor_naive(const ActionConstraints& ac, std::span<const IRState> batch, Constraint c,
                             MaskStats* stats) {
  const std::size_t n = ac.grammar().num_actions();
  MaskTensor t(batch.size(), n, kMasked);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ActionSet valid = ac.valid_actions(batch[i], c);
    auto row = t.row(i);
    for (std::size_t a = 0; a < n; ++a) {
      row[a] = valid.contains(static_cast<ActionId>(a)) ? 0.0f : kMasked;
    }
    if (stats) {
      stats->membership_tests += n;
      stats->element_writes += n;
    }
  }
  return t;
}

MaskTensor mask_tensor(const ActionConstraints& ac, std::span<const IRState> batch, MaskCache& cache, Constraint c,
                       MaskStats* stats) {
  const std::size_t n = ac.grammar().num_actions();
  MaskTensor t(batch.size(), n, kMasked);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto row = t.row(i);
    if (ac.is_type_keyed(batch[i], c)) {
      const MaskVector& m = mask_vector(ac, batch[i], cache, c);
      std::copy(m.begin(), m.end(), row.begin());
      if (stats) ++stats->bulk_fills;
    } else {
      const ActionSet cand = ac.act_cand(batch[i]);
      cand.for_each([&](ActionId a) { row[static_cast<std::size_t>(a)] = 0.0f; });
      if (stats) stats->element_writes += cand.size();
    }
  }
  return t;
}

Validness actions_validness(const ActionConstraints& ac, const IRState& s, MaskCache& cache, Constraint c) {
  if (ac.is_type_keyed(s, c)) return cache.get_or_compute(ac, s, c)->validness;
  ActionSet cand = ac.act_cand(s);
  Validness v;
  v.polarity = true;
  v.ids = std::make_shared<const std::vector<ActionId>>(cand.members());
  v.set = std::make_shared<const ActionSet>(std::move(cand));
  return v;
}

MaskTensor mask_tensor_with_validness(const ActionConstraints& ac, std::span<const IRState> batch, MaskCache& cache,
                                      Constraint c, MaskStats* stats) {
  const std::size_t n = ac.grammar().num_actions();
  MaskTensor t(batch.size(), n, kMasked);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Validness v = actions_validness(ac, batch[i], cache, c);
    auto row = t.row(i);
    const float listed_value = v.polarity ? 0.0f : kMasked;
    if (!v.polarity) {
      std::fill(row.begin(), row.end(), 0.0f);
      if (stats) ++stats->bulk_fills;
    }
    for (ActionId a : *v.ids) row[static_cast<std::size_t>(a)] = listed_value;
    if (stats) stats->element_writes += v.ids->size();
  }
  return t;
}

}  // namespace cgdec
