#pragma once

#include <stdexcept>
#include <vector>

#include "cgdec/ir.hpp"

namespace cgdec {

// Hole index out of range, a misplaced @*, or a failing #(...) evaluation.
class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompleteStateError : public std::logic_error {
 public:
  IncompleteStateError() : std::logic_error("state is not complete") {}
};

// Bottom-up template expansion of a complete state.
Sexpr to_logical_form(const IRState& s, TemplateKind kind = TemplateKind::default_form);
Sexpr tree_to_logical_form(const Grammar& g, const Tree& tree, TemplateKind kind);

// Expands one template against the logical forms of its children.
//
//   @i       child i
//   @*       every child, spliced into the enclosing list
//   #(f ...) evaluated at expansion time; nested lists inside are calls,
//            substituted children are data
//
// Builtins of #(...): concat, join, join-with, quote, symbol, string, list.
Sexpr expand_template(const Sexpr& body, const std::vector<Sexpr>& children);

// Text of a value as used by the string builtins: string contents, symbol
// name, or the printed form of a list.
std::string value_text(const Sexpr& v);

}  // namespace cgdec
