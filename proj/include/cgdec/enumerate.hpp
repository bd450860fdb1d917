#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cgdec/constrain.hpp"

namespace cgdec {

inline constexpr std::size_t kMaxEnumerationDepth = 10;
inline constexpr std::size_t kDefaultStateLimit = 2'000'000;

class EnumerationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every complete state reachable with at most `depth` actions under `c`, in
// depth-first order with actions ascending. Throws EnumerationLimitError when
// depth exceeds kMaxEnumerationDepth or more than `state_limit` states would
// be visited. With `count_conversions` false, super->sub conversion actions
// do not count towards the depth.
std::vector<IRState> enumerate_complete(const ActionConstraints& ac, Constraint c, std::size_t depth,
                                        std::size_t state_limit = kDefaultStateLimit, bool count_conversions = true);

// Sorted, deduplicated lines "<visual logical form>\t<action ids>" for the
// enumerate subcommand. States whose logical form cannot be built are
// listed with "!error" in place of the form.
std::vector<std::string> enumeration_listing(const std::vector<IRState>& states);

std::string join_ids(const std::vector<ActionId>& ids, char sep = ' ');

}  // namespace cgdec
