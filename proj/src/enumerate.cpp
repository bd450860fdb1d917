#include "cgdec/enumerate.hpp"

#include <algorithm>

#include "cgdec/logical_form.hpp"

namespace cgdec {

namespace {

ApplyCheck check_for(Constraint c) {
  if (c == Constraint::none) return ApplyCheck::none;
  if (c == Constraint::type_wu) return ApplyCheck::unified;
  return ApplyCheck::typed;
}

}  // namespace

std::vector<IRState> enumerate_complete(const ActionConstraints& ac, Constraint c, std::size_t depth,
                                        std::size_t state_limit, bool count_conversions) {
  if (depth > kMaxEnumerationDepth)
    throw EnumerationLimitError("depth " + std::to_string(depth) + " exceeds the bound of " +
                                std::to_string(kMaxEnumerationDepth));
  std::vector<IRState> out;
  std::size_t visited = 0;
  const Grammar& g = ac.grammar();
  // (state, actions counted towards the depth)
  std::vector<std::pair<IRState, std::size_t>> stack;
  stack.emplace_back(IRState::initial(g), 0);
  while (!stack.empty()) {
    auto [s, cost] = std::move(stack.back());
    stack.pop_back();
    if (++visited > state_limit)
      throw EnumerationLimitError("more than " + std::to_string(state_limit) + " states at depth " +
                                  std::to_string(depth));
    if (s.is_complete()) {
      out.push_back(std::move(s));
      continue;
    }
    const std::vector<ActionId> valid = ac.valid_actions(s, c).members();
    for (auto it = valid.rbegin(); it != valid.rend(); ++it) {
      const Action& a = g.action(*it);
      const bool free = !count_conversions && a.kind == ActionKind::rule && g.node_class(a.node_class).is_conversion;
      if (!free && cost >= depth) continue;
      stack.emplace_back(s.apply(*it, check_for(c)), cost + (free ? 0 : 1));
    }
  }
  return out;
}

std::string join_ids(const std::vector<ActionId>& ids, char sep) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(sep);
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<std::string> enumeration_listing(const std::vector<IRState>& states) {
  std::vector<std::string> lines;
  lines.reserve(states.size());
  for (const auto& s : states) {
    std::string form;
    try {
      form = print(to_logical_form(s, TemplateKind::visual));
    } catch (const std::exception&) {
      form = "!error";
    }
    lines.push_back(form + "\t" + join_ids(s.actions()));
  }
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  return lines;
}

}  // namespace cgdec
