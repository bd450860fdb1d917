#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string_view>
#include <vector>

#include "cgdec/candexpr.hpp"
#include "cgdec/grammar.hpp"
#include "cgdec/ir.hpp"

namespace cgdec {

// Bitset over action ids with a cached cardinality.
class ActionSet {
 public:
  explicit ActionSet(std::size_t universe = 0) : bits_((universe + 63) / 64, 0), universe_(universe) {}
  static ActionSet full(std::size_t universe);

  void insert(ActionId a) {
    auto& word = bits_[static_cast<std::size_t>(a) >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (static_cast<std::size_t>(a) & 63);
    count_ += (word & bit) == 0;
    word |= bit;
  }
  bool contains(ActionId a) const {
    return (bits_[static_cast<std::size_t>(a) >> 6] >> (static_cast<std::size_t>(a) & 63)) & 1u;
  }
  std::size_t size() const { return count_; }
  std::size_t universe() const { return universe_; }
  bool empty() const { return count_ == 0; }

  bool is_subset_of(const ActionSet& other) const;
  ActionSet complement() const;
  std::vector<ActionId> members() const;

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      while (word) {
        const int b = __builtin_ctzll(word);
        f(static_cast<ActionId>(w * 64 + static_cast<std::size_t>(b)));
        word &= word - 1;
      }
    }
  }

  bool operator==(const ActionSet& other) const {
    return universe_ == other.universe_ && bits_ == other.bits_;
  }

 private:
  std::vector<std::uint64_t> bits_;
  std::size_t universe_;
  std::size_t count_ = 0;
};

enum class Constraint : std::uint8_t { none, type_wu, type, hybr };

std::string_view to_string(Constraint c);
// Accepts none, type-wu, type, hybr. Throws std::invalid_argument.
Constraint parse_constraint(std::string_view text);

// The valid-action functions. act_hybr = act_cand when the lmnt's parent has
// candidate expressions, else act_type.
class ActionConstraints {
 public:
  ActionConstraints(const Grammar& g, const CandidateIndex* candidates);

  const Grammar& grammar() const { return *grammar_; }
  const CandidateIndex* candidates() const { return candidates_; }

  ActionSet act_none(const IRState& s) const;
  // The following throw std::logic_error on a complete state.
  ActionSet act_type(const IRState& s) const;
  ActionSet act_type_wu(const IRState& s) const;
  // Throws std::logic_error when the parent has no candidate expressions. A
  // token prefix that is not stored in the trie yields the empty set.
  ActionSet act_cand(const IRState& s) const;
  ActionSet act_hybr(const IRState& s) const;
  ActionSet valid_actions(const IRState& s, Constraint c) const;

  bool has_cand_expr(const IRState& s) const;
  // True when the valid set under `c` depends only on the lmnt type key.
  bool is_type_keyed(const IRState& s, Constraint c) const { return c != Constraint::hybr || !has_cand_expr(s); }

 private:
  ActionSet typed(const NonTerminal& nt, bool unified) const;

  const Grammar* grammar_;
  const CandidateIndex* candidates_;
};

// Mask entries are exactly 0 or kMasked.
inline constexpr float kMasked = -std::numeric_limits<float>::infinity();
using MaskVector = std::vector<float>;

MaskVector to_mask(const ActionSet& valid);

struct TypeKey {
  Constraint constraint;
  TypeId type;
  Modifier modifier;
  bool reducible;
  auto operator<=>(const TypeKey&) const = default;
};

// Key of a type-keyed state. Throws std::invalid_argument otherwise.
TypeKey type_key(const ActionConstraints& ac, const IRState& s, Constraint c);

// Per-row listing used by the validness-based tensor: the valid ids when
// `polarity` is true, the invalid ids otherwise.
struct Validness {
  std::shared_ptr<const ActionSet> set;  // the listed set
  std::shared_ptr<const std::vector<ActionId>> ids;
  bool polarity = true;
};

// |valid| <= |A| / 2 selects polarity true.
inline bool validness_polarity(std::size_t valid, std::size_t universe) { return 2 * valid <= universe; }

// Type-keyed cache of mask vectors. Readers share a lock; insertion is
// exclusive and keeps the first entry stored for a key.
class MaskCache {
 public:
  struct Entry {
    MaskVector mask;
    ActionSet valid;
    Validness validness;
  };

  std::shared_ptr<const Entry> find(const TypeKey& key) const;
  std::shared_ptr<const Entry> insert(const TypeKey& key, std::shared_ptr<const Entry> entry);
  std::shared_ptr<const Entry> get_or_compute(const ActionConstraints& ac, const IRState& s, Constraint c);

  std::size_t size() const;
  std::size_t computations() const { return computations_.load(); }
  std::size_t hits() const { return hits_.load(); }
  void clear();

 private:
  mutable std::shared_mutex mu_;
  std::map<TypeKey, std::shared_ptr<const Entry>> entries_;
  std::atomic<std::size_t> computations_{0};
  std::atomic<std::size_t> hits_{0};
};

std::shared_ptr<const MaskCache::Entry> make_cache_entry(ActionSet valid);

// Uncached mask for any constraint.
MaskVector compute_mask_vector(const ActionConstraints& ac, const IRState& s, Constraint c);
// Cached mask for a type-keyed state. The reference lives as long as the cache
// entry, i.e. until clear().
const MaskVector& mask_vector(const ActionConstraints& ac, const IRState& s, MaskCache& cache, Constraint c);

class MaskTensor {
 public:
  MaskTensor(std::size_t rows, std::size_t cols, float fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<float>& data() const { return data_; }
  bool operator==(const MaskTensor& o) const;

 private:
  std::size_t rows_, cols_;
  std::vector<float> data_;
};

// Work counters for the tensor builders.
struct MaskStats {
  std::size_t bulk_fills = 0;      // whole-row copies or fills
  std::size_t element_writes = 0;  // individual entries written
  std::size_t membership_tests = 0;
};

// Per row: compute the valid set, then test every action for membership.
MaskTensor mask_tensor_naive(const ActionConstraints& ac, std::span<const IRState> batch, Constraint c,
                             MaskStats* stats = nullptr);
// Rows start at kMasked; candidate rows are filled by enumerating act_cand,
// other rows copy the cached vector.
MaskTensor mask_tensor(const ActionConstraints& ac, std::span<const IRState> batch, MaskCache& cache, Constraint c,
                       MaskStats* stats = nullptr);

Validness actions_validness(const ActionConstraints& ac, const IRState& s, MaskCache& cache, Constraint c);
// Bit-identical to mask_tensor. Rows with polarity false start at 0 and only
// the listed invalid entries are written.
MaskTensor mask_tensor_with_validness(const ActionConstraints& ac, std::span<const IRState> batch, MaskCache& cache,
                                      Constraint c, MaskStats* stats = nullptr);

}  // namespace cgdec
