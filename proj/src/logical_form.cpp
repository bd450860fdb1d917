#include "cgdec/logical_form.hpp"

#include <charconv>

namespace cgdec {

namespace {

std::optional<std::size_t> hole_index(const Sexpr& e) {
  if (!e.is_symbol() || e.text().size() < 2 || e.text()[0] != '@' || e.text() == "@*") return std::nullopt;
  std::size_t i = 0;
  const char* first = e.text().data() + 1;
  const char* last = e.text().data() + e.text().size();
  auto [p, ec] = std::from_chars(first, last, i);
  if (ec != std::errc() || p != last) return std::nullopt;
  return i;
}

const Sexpr& child_at(const std::vector<Sexpr>& children, std::size_t i, const Sexpr& at) {
  if (i >= children.size())
    throw TemplateError(to_string(at.loc()) + ": hole @" + std::to_string(i) + " out of range for " +
                        std::to_string(children.size()) + " children");
  return children[i];
}

Sexpr evaluate(const Sexpr& e, const std::vector<Sexpr>& children);

// Evaluated arguments of a call, with @* spliced in.
std::vector<Sexpr> evaluate_args(const Sexpr& call, const std::vector<Sexpr>& children) {
  std::vector<Sexpr> args;
  for (std::size_t i = 1; i < call.size(); ++i) {
    if (call[i].is_symbol("@*")) {
      args.insert(args.end(), children.begin(), children.end());
    } else {
      args.push_back(evaluate(call[i], children));
    }
  }
  return args;
}

std::string joined(const std::vector<Sexpr>& args, std::size_t from, const std::string& sep) {
  std::string out;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (i > from) out += sep;
    out += value_text(args[i]);
  }
  return out;
}

Sexpr call_builtin(const Sexpr& call, const std::vector<Sexpr>& children) {
  if (call.size() == 0 || !call[0].is_symbol()) throw TemplateError(to_string(call.loc()) + ": #() needs a function name");
  const std::string& fn = call[0].text();
  if (fn == "quote") {
    if (call.size() != 2) throw TemplateError(to_string(call.loc()) + ": quote takes one argument");
    return expand_template(call[1], children);
  }
  std::vector<Sexpr> args = evaluate_args(call, children);
  if (fn == "concat") return Sexpr::string(joined(args, 0, ""));
  if (fn == "join") return Sexpr::string(joined(args, 0, " "));
  if (fn == "join-with") {
    if (args.empty()) throw TemplateError(to_string(call.loc()) + ": join-with needs a separator");
    return Sexpr::string(joined(args, 1, value_text(args[0])));
  }
  if (fn == "list") return Sexpr::list(std::move(args));
  if (fn == "string") {
    if (args.size() != 1) throw TemplateError(to_string(call.loc()) + ": string takes one argument");
    return Sexpr::string(value_text(args[0]));
  }
  if (fn == "symbol") {
    std::string text = joined(args, 0, "");
    if (!is_valid_symbol(text)) throw TemplateError(to_string(call.loc()) + ": '" + text + "' is not a valid symbol");
    return Sexpr::symbol(std::move(text));
  }
  throw TemplateError(to_string(call.loc()) + ": unknown template function '" + fn + "'");
}

Sexpr evaluate(const Sexpr& e, const std::vector<Sexpr>& children) {
  if (auto i = hole_index(e)) return child_at(children, *i, e);
  if (e.is_symbol("@*")) throw TemplateError(to_string(e.loc()) + ": @* must appear inside a list");
  if (e.is_atom()) return e;
  return call_builtin(e, children);
}

}  // namespace

std::string value_text(const Sexpr& v) { return v.is_atom() ? v.text() : print(v); }

Sexpr expand_template(const Sexpr& body, const std::vector<Sexpr>& children) {
  if (auto i = hole_index(body)) return child_at(children, *i, body);
  if (body.is_symbol("@*")) {
    if (children.size() == 1) return children.front();
    throw TemplateError(to_string(body.loc()) + ": @* must appear inside a list");
  }
  if (body.is_atom()) return body;
  if (body.is_eval()) return call_builtin(body, children);
  std::vector<Sexpr> items;
  for (const auto& item : body.items()) {
    if (item.is_symbol("@*")) {
      items.insert(items.end(), children.begin(), children.end());
    } else {
      items.push_back(expand_template(item, children));
    }
  }
  return Sexpr::list(std::move(items));
}

Sexpr tree_to_logical_form(const Grammar& g, const Tree& tree, TemplateKind kind) {
  const Action& a = g.action(tree.action);
  if (a.kind == ActionKind::nl_token) return Sexpr::string(g.vocabulary().token(a.token));
  if (a.kind != ActionKind::rule) throw TemplateError("reduce cannot appear in a completed tree");
  std::vector<Sexpr> children;
  children.reserve(tree.children.size());
  for (const auto& child : tree.children) children.push_back(tree_to_logical_form(g, *child, kind));
  const NodeClass& c = g.node_class(a.node_class);
  try {
    return expand_template(c.template_for(kind), children);
  } catch (const TemplateError& e) {
    throw TemplateError("class '" + c.name + "': " + e.what());
  }
}

Sexpr to_logical_form(const IRState& s, TemplateKind kind) {
  if (!s.is_complete()) throw IncompleteStateError();
  if (!s.result()) throw TemplateError("complete state has no root expression");
  return tree_to_logical_form(s.grammar(), *s.result(), kind);
}

}  // namespace cgdec
