#include "cgdec/candexpr.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <functional>
#include <sstream>

namespace cgdec {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

bool Trie::insert(std::span<const TokenId> tokens) {
  std::uint32_t cur = 0;
  for (TokenId t : tokens) {
    auto& kids = nodes_[cur].children;
    auto it = std::lower_bound(kids.begin(), kids.end(), t, [](const auto& kv, TokenId v) { return kv.first < v; });
    if (it != kids.end() && it->first == t) {
      cur = it->second;
      continue;
    }
    const auto next = static_cast<std::uint32_t>(nodes_.size());
    kids.insert(it, {t, next});
    nodes_.emplace_back();
    cur = next;
  }
  if (nodes_[cur].terminal) return false;
  nodes_[cur].terminal = true;
  ++sequences_;
  return true;
}

std::optional<std::uint32_t> Trie::find(std::span<const TokenId> prefix) const {
  std::uint32_t cur = 0;
  for (TokenId t : prefix) {
    const auto& kids = nodes_[cur].children;
    auto it = std::lower_bound(kids.begin(), kids.end(), t, [](const auto& kv, TokenId v) { return kv.first < v; });
    if (it == kids.end() || it->first != t) return std::nullopt;
    cur = it->second;
  }
  return cur;
}

std::vector<TokenId> Trie::valid_next_tokens(std::span<const TokenId> prefix) const {
  auto n = find(prefix);
  if (!n) throw std::out_of_range("prefix is not stored in the trie");
  std::vector<TokenId> out;
  for (const auto& [tok, _] : nodes_[*n].children) out.push_back(tok);
  return out;
}

bool Trie::is_complete_candidate(std::span<const TokenId> prefix) const {
  auto n = find(prefix);
  if (!n) throw std::out_of_range("prefix is not stored in the trie");
  return nodes_[*n].terminal;
}

std::vector<std::vector<TokenId>> Trie::sequences() const {
  std::vector<std::vector<TokenId>> out;
  std::vector<TokenId> path;
  std::function<void(std::uint32_t)> walk = [&](std::uint32_t n) {
    if (nodes_[n].terminal) out.push_back(path);
    for (const auto& [tok, child] : nodes_[n].children) {
      path.push_back(tok);
      walk(child);
      path.pop_back();
    }
  };
  walk(0);
  return out;
}

bool Trie::operator==(const Trie& other) const {
  if (nodes_.size() != other.nodes_.size() || sequences_ != other.sequences_) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].terminal != other.nodes_[i].terminal || nodes_[i].children != other.nodes_[i].children) return false;
  }
  return true;
}

std::vector<TokenId> tokenize_candidate(std::string_view expression, const Vocabulary& vocab,
                                        const TokenizeOptions& opts) {
  std::vector<TokenId> out;
  for (std::string word : split_words(expression)) {
    if (opts.fold_case)
      std::transform(word.begin(), word.end(), word.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto id = vocab.find(word);
    if (!id) throw UntokenizableError(word, std::string(expression));
    out.push_back(*id);
  }
  return out;
}

Trie build_trie(const CandidateSet& cs, const Vocabulary& vocab, const TokenizeOptions& opts,
                std::vector<std::string>* warnings) {
  Trie trie;
  for (const auto& expr : cs.expressions) {
    auto tokens = tokenize_candidate(expr, vocab, opts);
    if (tokens.empty()) {
      if (warnings) warnings->push_back("class '" + cs.node_class + "': skipped empty candidate");
      continue;
    }
    if (!trie.insert(tokens) && warnings)
      warnings->push_back("class '" + cs.node_class + "': duplicate candidate \"" + expr + "\" dropped");
  }
  return trie;
}

std::vector<CandidateSet> parse_candidate_file(std::string_view text) {
  std::vector<CandidateSet> sets;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("#class", 0) == 0 && (t.size() == 6 || std::isspace(static_cast<unsigned char>(t[6])))) {
      std::string name = trim(std::string_view(t).substr(6));
      if (name.empty() || name.find_first_of(" \t") != std::string::npos)
        throw ParseError("#class needs exactly one class name", {lineno, 1});
      sets.push_back(CandidateSet{name, {}});
      continue;
    }
    if (sets.empty()) throw ParseError("candidate expression before any #class header", {lineno, 1});
    sets.back().expressions.push_back(t);
  }
  return sets;
}

std::vector<CandidateSet> load_candidate_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_candidate_file(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.loc());
  }
}

CandidateIndex CandidateIndex::build(const Grammar& g, const std::vector<CandidateSet>& sets,
                                     const TokenizeOptions& opts, std::vector<std::string>* warnings) {
  CandidateIndex idx;
  idx.tries_.resize(g.node_classes().size());
  for (ClassId c = 0; c < static_cast<ClassId>(g.node_classes().size()); ++c)
    if (g.node_class(c).has_candidates) idx.tries_[static_cast<std::size_t>(c)].emplace();
  for (const auto& cs : sets) {
    auto c = g.find_class(cs.node_class);
    if (!c) throw std::invalid_argument("candidate set for unknown class '" + cs.node_class + "'");
    if (!g.node_class(*c).has_candidates)
      throw std::invalid_argument("class '" + cs.node_class + "' is not declared with arg-candidate");
    Trie part = build_trie(cs, g.vocabulary(), opts, warnings);
    Trie& target = *idx.tries_[static_cast<std::size_t>(*c)];
    if (target.empty()) {
      target = std::move(part);
    } else {
      for (const auto& seq : part.sequences())
        if (!target.insert(seq) && warnings)
          warnings->push_back("class '" + cs.node_class + "': duplicate candidate dropped");
    }
  }
  return idx;
}

const Trie* CandidateIndex::trie_for(ClassId c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= tries_.size() || !tries_[static_cast<std::size_t>(c)]) return nullptr;
  return &*tries_[static_cast<std::size_t>(c)];
}

std::vector<ClassId> CandidateIndex::empty_classes(const Grammar& g) const {
  std::vector<ClassId> out;
  for (ClassId c = 0; c < static_cast<ClassId>(g.node_classes().size()); ++c) {
    if (!g.node_class(c).has_candidates) continue;
    const Trie* t = trie_for(c);
    if (!t || t->empty()) out.push_back(c);
  }
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::string& base_dir) {
  std::vector<ManifestEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto words = split_words(t);
    if (words.size() != 3) throw ParseError("manifest line needs <domain> <class> <path>", {lineno, 1});
    std::filesystem::path p(words[2]);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    out.push_back(ManifestEntry{words[0], words[1], p.string()});
  }
  return out;
}

std::vector<CandidateSet> load_domain_candidates(const std::vector<ManifestEntry>& manifest,
                                                 const std::string& domain) {
  std::vector<CandidateSet> out;
  for (const auto& e : manifest) {
    if (e.domain != domain) continue;
    bool found = false;
    for (auto& cs : load_candidate_file(e.path)) {
      if (cs.node_class != e.node_class) continue;
      out.push_back(std::move(cs));
      found = true;
    }
    if (!found) throw std::invalid_argument(e.path + ": no #class " + e.node_class + " section");
  }
  return out;
}

}  // namespace cgdec
