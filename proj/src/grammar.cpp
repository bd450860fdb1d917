#include "cgdec/grammar.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <unordered_map>

namespace cgdec {

std::string_view to_string(Modifier m) {
  switch (m) {
    case Modifier::none: return "";
    case Modifier::optional: return "?";
    case Modifier::repeated: return "*";
  }
  return "";
}

// ---------------------------------------------------------------------------
// TypeHierarchy

TypeId TypeHierarchy::add_type(const std::string& name) {
  if (auto t = find(name)) return *t;
  names_.push_back(name);
  closure_.clear();
  return static_cast<TypeId>(names_.size() - 1);
}

void TypeHierarchy::add_edge(TypeId sub, TypeId super) {
  const auto n = static_cast<TypeId>(names_.size());
  if (sub < 0 || sub >= n || super < 0 || super >= n) throw std::out_of_range("type id out of range");
  if (std::find(edges_.begin(), edges_.end(), std::pair{sub, super}) == edges_.end()) edges_.emplace_back(sub, super);
  closure_.clear();
}

void TypeHierarchy::finalize() {
  const std::size_t n = names_.size();
  std::vector<std::vector<TypeId>> supers(n);
  for (auto [sub, super] : edges_) supers[static_cast<std::size_t>(sub)].push_back(super);

  // Cycle detection by colouring DFS.
  std::vector<int> colour(n, 0);
  std::vector<std::pair<TypeId, std::size_t>> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (colour[start]) continue;
    stack.emplace_back(static_cast<TypeId>(start), 0);
    colour[start] = 1;
    while (!stack.empty()) {
      auto& [t, next] = stack.back();
      auto& out = supers[static_cast<std::size_t>(t)];
      if (next < out.size()) {
        TypeId s = out[next++];
        auto& c = colour[static_cast<std::size_t>(s)];
        if (c == 1) throw CyclicHierarchyError(names_[static_cast<std::size_t>(s)], s);
        if (c == 0) {
          c = 1;
          stack.emplace_back(s, 0);
        }
      } else {
        colour[static_cast<std::size_t>(t)] = 2;
        stack.pop_back();
      }
    }
  }

  closure_.assign((n * n + 63) / 64, 0);
  auto set = [&](std::size_t a, std::size_t b) {
    std::size_t bit = a * n + b;
    closure_[bit >> 6] |= std::uint64_t{1} << (bit & 63);
  };
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<TypeId> todo{static_cast<TypeId>(t)};
    std::vector<bool> seen(n, false);
    seen[t] = true;
    while (!todo.empty()) {
      TypeId cur = todo.back();
      todo.pop_back();
      set(t, static_cast<std::size_t>(cur));
      for (TypeId s : supers[static_cast<std::size_t>(cur)])
        if (!seen[static_cast<std::size_t>(s)]) {
          seen[static_cast<std::size_t>(s)] = true;
          todo.push_back(s);
        }
    }
  }
}

std::optional<TypeId> TypeHierarchy::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<TypeId>(i);
  return std::nullopt;
}

TypeId TypeHierarchy::require(std::string_view name) const {
  if (auto t = find(name)) return *t;
  throw UnknownTypeError(std::string(name));
}

std::vector<TypeId> TypeHierarchy::roots() const {
  std::vector<bool> has_super(names_.size(), false);
  for (auto [sub, super] : edges_) has_super[static_cast<std::size_t>(sub)] = true;
  std::vector<TypeId> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (!has_super[i]) out.push_back(static_cast<TypeId>(i));
  return out;
}

std::vector<TypeId> TypeHierarchy::direct_supertypes(TypeId t) const {
  std::vector<TypeId> out;
  for (auto [sub, super] : edges_)
    if (sub == t) out.push_back(super);
  return out;
}

bool TypeHierarchy::is_subtype(std::string_view sub, std::string_view super) const {
  return is_subtype(require(sub), require(super));
}

// ---------------------------------------------------------------------------
// Grammar queries

std::optional<ClassId> Grammar::find_class(std::string_view name) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i].name == name) return static_cast<ClassId>(i);
  return std::nullopt;
}

std::optional<ActionId> Grammar::rule_action(std::string_view class_name) const {
  if (auto c = find_class(class_name)) return class_action(*c);
  return std::nullopt;
}

std::span<const TypeId> Grammar::lhs(ActionId a) const {
  const Action& act = action(a);
  switch (act.kind) {
    case ActionKind::rule: return classes_[static_cast<std::size_t>(act.node_class)].return_types;
    case ActionKind::nl_token: return token_return_sets_[static_cast<std::size_t>(act.return_set)];
    case ActionKind::reduce: return {};
  }
  return {};
}

const std::vector<TypeId>& Grammar::token_return_types(TokenId t) const {
  return token_return_sets_.at(static_cast<std::size_t>(token_set_of_.at(static_cast<std::size_t>(t))));
}

bool Grammar::compatible(ActionId a, TypeId nt) const {
  for (TypeId t : lhs(a))
    if (type_fits(t, nt)) return true;
  return false;
}

bool Grammar::compatible_unified(ActionId a, TypeId nt) const {
  if (action(a).kind != ActionKind::nl_token) return compatible(a, nt);
  for (TypeId t : universal_token_types_)
    if (type_fits(t, nt)) return true;
  return false;
}

std::string Grammar::action_label(ActionId a) const {
  const Action& act = action(a);
  switch (act.kind) {
    case ActionKind::rule: return classes_[static_cast<std::size_t>(act.node_class)].name;
    case ActionKind::nl_token: return "<nl-token " + vocab_.token(act.token) + ">";
    case ActionKind::reduce: return "reduce";
  }
  return "?";
}

void Grammar::build_inventory() {
  // Distinct nl-token return sets are interned; most tokens share the base set.
  std::vector<std::regex> regexes;
  regexes.reserve(token_patterns_.size());
  for (const auto& p : token_patterns_) regexes.emplace_back(p.regex, std::regex::ECMAScript);

  std::map<std::vector<TypeId>, std::int32_t> interned;
  token_set_of_.assign(vocab_.size(), -1);
  std::set<TypeId> universal;
  for (std::size_t tok = 0; tok < vocab_.size(); ++tok) {
    std::set<TypeId> types(token_base_types_.begin(), token_base_types_.end());
    for (std::size_t p = 0; p < regexes.size(); ++p)
      if (std::regex_match(vocab_.tokens()[tok], regexes[p]))
        types.insert(token_patterns_[p].types.begin(), token_patterns_[p].types.end());
    std::vector<TypeId> set(types.begin(), types.end());
    auto [it, inserted] = interned.emplace(set, static_cast<std::int32_t>(token_return_sets_.size()));
    if (inserted) token_return_sets_.push_back(set);
    token_set_of_[tok] = it->second;
    universal.insert(set.begin(), set.end());
  }
  universal_token_types_.assign(universal.begin(), universal.end());

  actions_.clear();
  actions_.reserve(classes_.size() + vocab_.size() + 1);
  for (std::size_t c = 0; c < classes_.size(); ++c)
    actions_.push_back({ActionKind::rule, static_cast<ActionId>(c), static_cast<ClassId>(c), -1, -1});
  first_token_action_ = static_cast<ActionId>(actions_.size());
  for (std::size_t tok = 0; tok < vocab_.size(); ++tok)
    actions_.push_back({ActionKind::nl_token, static_cast<ActionId>(actions_.size()), -1, static_cast<TokenId>(tok),
                        token_set_of_[tok]});
  reduce_action_ = static_cast<ActionId>(actions_.size());
  actions_.push_back({ActionKind::reduce, reduce_action_, -1, -1, -1});
}

void Grammar::compute_lints() {
  const std::size_t n = hierarchy_.size();
  for (const auto& c : classes_) {
    if (c.is_conversion || c.return_types.size() < 2) continue;
    bool related = true;
    for (std::size_t i = 0; i < c.return_types.size() && related; ++i)
      for (std::size_t j = i + 1; j < c.return_types.size(); ++j) {
        TypeId a = c.return_types[i], b = c.return_types[j];
        if (!hierarchy_.is_subtype(a, b) && !hierarchy_.is_subtype(b, a)) {
          related = false;
          break;
        }
      }
    if (!related) lints_.push_back("class '" + c.name + "' returns a union of unrelated types");
  }

  // Types used on some derivation from the root: reachable non-terminals plus
  // what reachable actions produce for them.
  std::vector<bool> used(n, false), nt_seen(n, false);
  std::vector<TypeId> todo{root_type_};
  nt_seen[static_cast<std::size_t>(root_type_)] = true;
  while (!todo.empty()) {
    TypeId nt = todo.back();
    todo.pop_back();
    used[static_cast<std::size_t>(nt)] = true;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      if (!compatible(class_action(static_cast<ClassId>(c)), nt)) continue;
      for (TypeId r : classes_[c].return_types) used[static_cast<std::size_t>(r)] = true;
      for (const auto& p : classes_[c].params)
        if (!nt_seen[static_cast<std::size_t>(p.type)]) {
          nt_seen[static_cast<std::size_t>(p.type)] = true;
          todo.push_back(p.type);
        }
    }
    for (const auto& set : token_return_sets_)
      for (TypeId t : set)
        if (type_fits(t, nt)) used[static_cast<std::size_t>(t)] = true;
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (used[t]) continue;
    bool below = false, above = false;
    for (std::size_t u = 0; u < n; ++u) {
      if (!used[u]) continue;
      below = below || hierarchy_.is_subtype(static_cast<TypeId>(u), static_cast<TypeId>(t));
      above = above || hierarchy_.is_subtype(static_cast<TypeId>(t), static_cast<TypeId>(u));
    }
    if (!(below && above)) lints_.push_back("type '" + hierarchy_.name(static_cast<TypeId>(t)) + "' is unreachable from the root");
  }
}

// ---------------------------------------------------------------------------
// DSL parser

namespace {

struct RawClass {
  Sexpr form;
  std::string name;
  std::vector<Sexpr> act_type;
  std::vector<Sexpr> params;
  std::optional<Sexpr> default_template;
  std::optional<Sexpr> visual_template;
  bool has_candidates = false;
};

[[noreturn]] void fail(const Sexpr& at, const std::string& what) { throw ParseError(what, at.loc()); }

const std::string& symbol_of(const Sexpr& e, const char* what) {
  if (!e.is_symbol()) fail(e, std::string("expected ") + what);
  return e.text();
}

bool is_keyword_form(const Sexpr& e, std::string_view head) { return e.is_list() && e.size() > 0 && e[0].is_symbol(head); }

void check_template_holes(const Sexpr& t, const RawClass& raw) {
  if (t.is_symbol() && !t.text().empty() && t.text()[0] == '@') {
    const std::string& s = t.text();
    if (s == "@*") return;
    if (s.size() < 2 || !std::all_of(s.begin() + 1, s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      fail(t, "malformed template hole '" + s + "'");
    bool has_rest = false;
    for (const auto& p : raw.params) has_rest = has_rest || p.is_symbol("&rest");
    std::size_t arity = 0;
    for (const auto& p : raw.params)
      if (!p.is_symbol("&rest") && !p.is_symbol("&optional")) ++arity;
    if (!has_rest && std::stoul(s.substr(1)) >= arity)
      fail(t, "template hole '" + s + "' out of range for class '" + raw.name + "'");
    return;
  }
  for (const auto& item : t.items()) check_template_holes(item, raw);
}

RawClass parse_define_action(const Sexpr& form) {
  RawClass raw;
  raw.form = form;
  if (form.size() < 2) fail(form, "define-action needs a class name");
  raw.name = symbol_of(form[1], "class name");
  bool seen_type = false;
  for (std::size_t i = 2; i < form.size(); ++i) {
    const Sexpr& clause = form[i];
    if (!clause.is_list() || clause.size() == 0 || !clause[0].is_symbol()) fail(clause, "expected a (keyword ...) clause");
    const std::string& key = clause[0].text();
    if (key == "act-type") {
      if (clause.size() < 2) fail(clause, "act-type needs at least one type");
      raw.act_type.assign(clause.items().begin() + 1, clause.items().end());
      seen_type = true;
    } else if (key == "param-types") {
      raw.params.assign(clause.items().begin() + 1, clause.items().end());
    } else if (key == "expr-dict") {
      for (std::size_t j = 1; j < clause.size(); ++j) {
        const Sexpr& entry = clause[j];
        if (!entry.is_list() || entry.size() != 2 || !entry[0].is_symbol()) fail(entry, "expected (default <template>) or (visual <template>)");
        if (entry[0].text() == "default") raw.default_template = entry[1];
        else if (entry[0].text() == "visual") raw.visual_template = entry[1];
        else fail(entry[0], "unknown template kind '" + entry[0].text() + "'");
      }
    } else if (key == "arg-candidate") {
      raw.has_candidates = true;
    } else {
      fail(clause[0], "unknown define-action clause '" + key + "'");
    }
  }
  if (!seen_type) fail(form, "class '" + raw.name + "' has no act-type");
  if (!raw.default_template) fail(form, "class '" + raw.name + "' has no default template");
  return raw;
}

std::vector<ParamType> resolve_params(const RawClass& raw, const TypeHierarchy& h) {
  std::vector<ParamType> out;
  Modifier mode = Modifier::none;
  bool rest_pending = false;
  for (const auto& p : raw.params) {
    if (p.is_symbol("&optional")) {
      if (mode != Modifier::none || rest_pending) fail(p, "&optional must precede &rest and appear once");
      mode = Modifier::optional;
      continue;
    }
    if (p.is_symbol("&rest")) {
      if (rest_pending || (!out.empty() && out.back().modifier == Modifier::repeated)) fail(p, "duplicate &rest");
      rest_pending = true;
      continue;
    }
    const std::string& name = symbol_of(p, "parameter type");
    auto t = h.find(name);
    if (!t) fail(p, "unknown type '" + name + "'");
    if (!out.empty() && out.back().modifier == Modifier::repeated) fail(p, "&rest parameter must be last");
    if (rest_pending) {
      out.push_back({*t, Modifier::repeated});
      rest_pending = false;
    } else {
      out.push_back({*t, mode});
    }
  }
  if (rest_pending) fail(raw.form, "&rest without a parameter type in class '" + raw.name + "'");
  return out;
}

}  // namespace

Grammar parse_grammar(std::string_view dsl_text, Vocabulary vocabulary, GrammarOptions options) {
  std::vector<Sexpr> forms = read_all(dsl_text);

  Grammar g;
  g.options_ = options;
  g.vocab_ = std::move(vocabulary);

  std::vector<RawClass> raws;
  std::vector<std::pair<Sexpr, Sexpr>> raw_edges;  // (sub, super) symbols
  std::optional<Sexpr> root;
  std::optional<Sexpr> typing;
  std::unordered_map<std::string, SourceLoc> class_locs;

  // Pass 1: collect forms and declare every type name that is introduced by
  // define-types, an act-type, or nl-token typing. Ids follow first appearance.
  for (const auto& form : forms) {
    if (!form.is_list() || form.size() == 0 || !form[0].is_symbol()) fail(form, "expected a top-level (define-... ) form");
    const std::string& head = form[0].text();
    if (head == "define-types") {
      for (std::size_t i = 1; i < form.size(); ++i) {
        const Sexpr& entry = form[i];
        if (entry.is_symbol()) {
          g.hierarchy_.add_type(entry.text());
          continue;
        }
        if (!entry.is_list() || entry.size() == 0) fail(entry, "expected (type super-type ...)");
        g.hierarchy_.add_type(symbol_of(entry[0], "type name"));
        for (std::size_t j = 1; j < entry.size(); ++j) {
          g.hierarchy_.add_type(symbol_of(entry[j], "super-type name"));
          raw_edges.emplace_back(entry[0], entry[j]);
        }
      }
    } else if (head == "define-action") {
      RawClass raw = parse_define_action(form);
      if (auto [it, inserted] = class_locs.emplace(raw.name, form.loc()); !inserted)
        fail(form, "duplicate node class '" + raw.name + "' (first defined at " + to_string(it->second) + ")");
      for (const auto& t : raw.act_type) g.hierarchy_.add_type(symbol_of(t, "return type"));
      raws.push_back(std::move(raw));
    } else if (head == "define-nl-token-typing") {
      if (typing) fail(form, "duplicate define-nl-token-typing");
      typing = form;
      for (std::size_t i = 1; i < form.size(); ++i) {
        const Sexpr& rule = form[i];
        if (is_keyword_form(rule, "base")) {
          for (std::size_t j = 1; j < rule.size(); ++j) g.hierarchy_.add_type(symbol_of(rule[j], "type name"));
        } else if (is_keyword_form(rule, "pattern")) {
          if (rule.size() < 3 || !rule[1].is_string()) fail(rule, "expected (pattern \"regex\" type ...)");
          for (std::size_t j = 2; j < rule.size(); ++j) g.hierarchy_.add_type(symbol_of(rule[j], "type name"));
        } else {
          fail(rule, "expected (base ...) or (pattern ...)");
        }
      }
    } else if (head == "define-root-type") {
      if (root) fail(form, "duplicate define-root-type");
      if (form.size() != 2) fail(form, "expected (define-root-type <type>)");
      root = form[1];
    } else {
      fail(form[0], "unknown top-level form '" + head + "'");
    }
  }

  for (const auto& [sub, super] : raw_edges)
    g.hierarchy_.add_edge(g.hierarchy_.require(sub.text()), g.hierarchy_.require(super.text()));
  try {
    g.hierarchy_.finalize();
  } catch (const CyclicHierarchyError& e) {
    for (const auto& [sub, super] : raw_edges)
      if (sub.text() == g.hierarchy_.name(e.type())) fail(sub, e.what());
    throw ParseError(e.what(), {});
  }

  if (!root) throw ParseError("missing (define-root-type <type>)", {});
  {
    const std::string& name = symbol_of(*root, "root type");
    auto t = g.hierarchy_.find(name);
    if (!t) fail(*root, "unknown type '" + name + "'");
    g.root_type_ = *t;
  }

  if (typing) {
    for (std::size_t i = 1; i < typing->size(); ++i) {
      const Sexpr& rule = (*typing)[i];
      std::vector<TypeId> types;
      std::size_t first = is_keyword_form(rule, "base") ? 1 : 2;
      for (std::size_t j = first; j < rule.size(); ++j) types.push_back(g.hierarchy_.require(rule[j].text()));
      if (first == 1) {
        g.token_base_types_.insert(g.token_base_types_.end(), types.begin(), types.end());
      } else {
        try {
          std::regex check(rule[1].text(), std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          fail(rule[1], std::string("bad nl-token pattern: ") + e.what());
        }
        g.token_patterns_.push_back({rule[1].text(), std::move(types)});
      }
    }
    std::sort(g.token_base_types_.begin(), g.token_base_types_.end());
    g.token_base_types_.erase(std::unique(g.token_base_types_.begin(), g.token_base_types_.end()), g.token_base_types_.end());
  }

  for (const auto& raw : raws) {
    NodeClass c;
    c.name = raw.name;
    c.loc = raw.form.loc();
    for (const auto& t : raw.act_type) c.return_types.push_back(g.hierarchy_.require(t.text()));
    std::sort(c.return_types.begin(), c.return_types.end());
    c.return_types.erase(std::unique(c.return_types.begin(), c.return_types.end()), c.return_types.end());
    c.params = resolve_params(raw, g.hierarchy_);
    c.has_candidates = raw.has_candidates;
    if (c.has_candidates && (c.params.size() != 1 || c.params[0].modifier != Modifier::repeated))
      fail(raw.form, "class '" + c.name + "' uses arg-candidate, so its param-types must be exactly (&rest <type>)");
    check_template_holes(*raw.default_template, raw);
    c.default_template = *raw.default_template;
    if (raw.visual_template) {
      check_template_holes(*raw.visual_template, raw);
      c.visual_template = *raw.visual_template;
    }
    g.classes_.push_back(std::move(c));
  }

  if (!options.subtype_inference) {
    for (auto [sub, super] : g.hierarchy_.edges()) {
      NodeClass conv;
      conv.name = g.hierarchy_.name(super) + "->" + g.hierarchy_.name(sub);
      conv.return_types = {super};
      conv.params = {{sub, Modifier::none}};
      conv.default_template = Sexpr::symbol("@0");
      conv.is_conversion = true;
      g.classes_.push_back(std::move(conv));
    }
  }

  g.build_inventory();
  g.compute_lints();
  return g;
}

}  // namespace cgdec
