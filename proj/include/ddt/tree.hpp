#pragma once

// Data dependent tree: a persistent collection of strings whose tree shape is
// a function of the string content and the epoch's hash seed.
//
// Level 0 holds the leaves. Odd levels are duplicate levels: each node absorbs
// a maximal run of equal-fingerprint nodes from the level below and stores it
// as (multiplicity, one shared child). Even levels >= 2 are increasing levels:
// each node absorbs a maximal run of strictly increasing fingerprints. The
// first level holding a single node is the root.
//
// Nodes are immutable and interned through the fingerprint table, so equal
// strings within an epoch share one canonical subtree. Handles keep their
// nodes alive; dead nodes leave the table.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ddt/errors.hpp"
#include "ddt/fingerprint.hpp"

namespace ddt {

enum class node_kind : std::uint8_t { leaf, duplicate, increasing };

inline const char* to_string(node_kind k) {
  switch (k) {
    case node_kind::leaf: return "leaf";
    case node_kind::duplicate: return "dup";
    case node_kind::increasing: return "inc";
  }
  return "?";
}

template <std::integral Symbol>
class basic_node;
template <std::integral Symbol>
class basic_collection;

namespace detail {
template <std::integral Symbol>
class collection_state;
}  // namespace detail

/// Intrusive, non-atomic reference to an immutable node.
template <std::integral Symbol>
class node_ptr {
 public:
  using node_type = basic_node<Symbol>;

  node_ptr() = default;
  explicit node_ptr(const node_type* n) : p_(n) { acquire(); }
  node_ptr(const node_ptr& o) : p_(o.p_) { acquire(); }
  node_ptr(node_ptr&& o) noexcept : p_(std::exchange(o.p_, nullptr)) {}
  node_ptr& operator=(const node_ptr& o) {
    node_ptr tmp(o);
    swap(tmp);
    return *this;
  }
  node_ptr& operator=(node_ptr&& o) noexcept {
    node_ptr tmp(std::move(o));
    swap(tmp);
    return *this;
  }
  ~node_ptr() { release(); }

  void swap(node_ptr& o) noexcept { std::swap(p_, o.p_); }

  const node_type* get() const { return p_; }
  const node_type* operator->() const { return p_; }
  const node_type& operator*() const { return *p_; }
  explicit operator bool() const { return p_ != nullptr; }
  friend bool operator==(const node_ptr& a, const node_ptr& b) { return a.p_ == b.p_; }

 private:
  void acquire();
  void release();

  const node_type* p_ = nullptr;
};

template <std::integral Symbol>
class basic_node {
 public:
  using ptr = node_ptr<Symbol>;

  node_kind kind() const { return kind_; }
  std::uint32_t level() const { return level_; }
  fingerprint fp() const { return fp_; }
  std::uint64_t leaf_count() const { return leaf_count_; }
  Symbol symbol() const { return symbol_; }
  std::uint64_t multiplicity() const { return multiplicity_; }

  /// Number of logical children: the multiplicity for duplicate nodes.
  std::uint64_t child_count() const {
    switch (kind_) {
      case node_kind::leaf: return 0;
      case node_kind::duplicate: return multiplicity_;
      case node_kind::increasing: return children_.size();
    }
    return 0;
  }

  const basic_node* child(std::uint64_t i) const {
    return kind_ == node_kind::duplicate ? children_.front().get() : children_[i].get();
  }

  /// Stored children; a duplicate node stores its single shared child.
  std::span<const ptr> children() const { return children_; }

  preimage to_preimage() const {
    switch (kind_) {
      case node_kind::leaf:
        return leaf_preimage{symbol_bits(symbol_), static_cast<std::uint8_t>(sizeof(Symbol))};
      case node_kind::duplicate:
        return duplicate_preimage{level_, multiplicity_, children_.front()->fp()};
      case node_kind::increasing: {
        increasing_preimage p{level_, {}};
        p.children.reserve(children_.size());
        for (const auto& c : children_) p.children.push_back(c->fp());
        return p;
      }
    }
    return {};
  }

  static std::uint64_t symbol_bits(Symbol s) {
    return static_cast<std::uint64_t>(static_cast<std::make_unsigned_t<Symbol>>(s));
  }

 private:
  friend class node_ptr<Symbol>;
  friend class basic_collection<Symbol>;
  friend class detail::collection_state<Symbol>;

  basic_node() = default;

  mutable std::uint32_t refs_ = 0;
  node_kind kind_ = node_kind::leaf;
  std::uint32_t level_ = 0;
  fingerprint fp_;
  std::uint64_t leaf_count_ = 1;
  std::uint64_t multiplicity_ = 0;
  Symbol symbol_{};
  detail::collection_state<Symbol>* owner_ = nullptr;
  std::vector<ptr> children_;
};

struct collection_options {
  hash_seed seed{0x5EEDULL};
  /// Fingerprint width in bits. Values below 64 only make sense for tests.
  unsigned fingerprint_bits = 64;
  /// Height cap factor: a node above alpha * log2(n) forces a rebuild.
  double alpha = 5.0;
  /// Lower bound on the height cap so tiny collections are not rebuilt on
  /// every unlucky pair of top-level nodes.
  std::uint32_t min_height_cap = 40;
};

struct collection_stats {
  std::uint64_t nodes_built = 0;      // node constructions requested, shared hits included
  std::uint64_t nodes_allocated = 0;  // distinct nodes created
  std::uint64_t collisions = 0;
  std::uint64_t rebuilds = 0;         // retired epochs
  std::uint32_t max_height = 0;       // highest level of any node built
  std::uint64_t max_leaves = 0;       // largest leaf count of any node built this epoch
};

namespace detail {

template <std::integral Symbol>
struct run {
  node_ptr<Symbol> node;
  std::uint64_t count = 1;
};

template <std::integral Symbol>
class collection_state {
 public:
  using node_type = basic_node<Symbol>;
  using ptr = node_ptr<Symbol>;

  struct same_node {
    bool operator()(const node_type* a, const node_type* b) const {
      if (a == b) return true;
      if (a->kind_ != b->kind_ || a->level_ != b->level_) return false;
      switch (a->kind_) {
        case node_kind::leaf: return a->symbol_ == b->symbol_;
        case node_kind::duplicate:
          return a->multiplicity_ == b->multiplicity_ && a->children_ == b->children_;
        case node_kind::increasing: return a->children_ == b->children_;
      }
      return false;
    }
  };

  explicit collection_state(const collection_options& opts)
      : options(opts), table(opts.seed) {}

  collection_state(const collection_state&) = delete;
  collection_state& operator=(const collection_state&) = delete;

  ~collection_state() {
    for (auto* n : free_) delete n;
  }

  hash_seed seed() const { return table.epoch(); }

  std::uint32_t height_cap() const {
    if (cap_leaves_ != stats.max_leaves) {
      const double n = std::max<double>(2.0, static_cast<double>(stats.max_leaves));
      const auto cap = static_cast<std::uint32_t>(std::ceil(options.alpha * std::log2(n)));
      cap_ = std::max(cap, options.min_height_cap);
      cap_leaves_ = stats.max_leaves;
    }
    return cap_;
  }

  void reset(hash_seed seed) {
    table.reset(seed);
    ++epoch;
    ++stats.rebuilds;
    stats.max_leaves = 0;
  }

  ptr make_leaf(Symbol s) {
    const fingerprint fp = hash_leaf(seed(), node_type::symbol_bits(s), sizeof(Symbol),
                                     options.fingerprint_bits);
    return intern(fp, node_kind::leaf, 0, 1, [&](node_type& n) { n.symbol_ = s; },
                  [&](const node_type& n) { return n.symbol_ == s; });
  }

  ptr make_duplicate(std::uint32_t level, std::uint64_t multiplicity, const ptr& child) {
    DDT_CHECK(level % 2 == 1 && child->level() + 1 == level && multiplicity >= 1,
              "malformed duplicate node");
    const fingerprint fp =
        hash_duplicate(seed(), level, multiplicity, child->fp(), options.fingerprint_bits);
    return intern(
        fp, node_kind::duplicate, level, multiplicity * child->leaf_count(),
        [&](node_type& n) {
          n.multiplicity_ = multiplicity;
          n.children_.push_back(child);
        },
        [&](const node_type& n) {
          return n.multiplicity_ == multiplicity && n.children_.front() == child;
        });
  }

  /// Children must be level-1 nodes with strictly increasing fingerprints.
  ptr make_increasing(std::uint32_t level, std::span<const ptr> children) {
    DDT_CHECK(level % 2 == 0 && level >= 2 && !children.empty(), "malformed increasing node");
    std::uint64_t leaves = 0;
    for (std::size_t i = 0; i < children.size(); ++i) {
      DDT_CHECK(children[i]->level() + 1 == level, "child level mismatch");
      DDT_CHECK(i == 0 || children[i - 1]->fp() < children[i]->fp(),
                "increasing node children out of order");
      leaves += children[i]->leaf_count();
    }
    const fingerprint fp = hash_increasing(
        seed(), level, children.size(), [&](std::size_t i) { return children[i]->fp(); },
        options.fingerprint_bits);
    return intern(
        fp, node_kind::increasing, level, leaves,
        [&](node_type& n) { n.children_.assign(children.begin(), children.end()); },
        [&](const node_type& n) {
          return std::equal(n.children_.begin(), n.children_.end(), children.begin(),
                            children.end());
        });
  }

  /// Groups one level. Odd levels merge runs of equal nodes; even levels
  /// split at every non-increase of fingerprints.
  std::vector<run<Symbol>> group(std::uint32_t level, std::span<const run<Symbol>> seq) {
    std::vector<run<Symbol>> out;
    if (level % 2 == 1) {
      for (std::size_t i = 0; i < seq.size();) {
        std::uint64_t count = seq[i].count;
        std::size_t k = i + 1;
        for (; k < seq.size() && seq[k].node == seq[i].node; ++k) count += seq[k].count;
        push_run(out, make_duplicate(level, count, seq[i].node), 1);
        i = k;
      }
      return out;
    }
    std::vector<ptr> pending;
    auto flush = [&] {
      push_run(out, make_increasing(level, pending), 1);
      pending.clear();
    };
    for (const auto& r : seq) {
      // Duplicate levels leave no adjacent equal nodes behind.
      DDT_CHECK(r.count == 1, "run at the input of an increasing level");
      if (!pending.empty() && !(pending.back()->fp() < r.node->fp())) {
        DDT_CHECK(pending.back() != r.node, "adjacent equal nodes at an increasing level");
        flush();
      }
      pending.push_back(r.node);
    }
    if (!pending.empty()) flush();
    return out;
  }

  static void push_run(std::vector<run<Symbol>>& seq, ptr node, std::uint64_t count) {
    if (count == 0) return;
    if (!seq.empty() && seq.back().node == node) {
      seq.back().count += count;
    } else {
      seq.push_back({std::move(node), count});
    }
  }

  /// Called when the last reference to n goes away. The node is recycled;
  /// its children vector keeps its capacity.
  void dispose(const node_type* n) {
    table.erase_if(n->fp_, [n](const node_type* e) { return e == n; });
    auto* m = const_cast<node_type*>(n);
    m->children_.clear();  // may cascade into further dispose calls
    free_.push_back(m);
  }

  std::optional<preimage> lookup(fingerprint fp) const {
    if (const auto* e = table.find(fp)) return (*e)->to_preimage();
    return std::nullopt;
  }

  collection_options options;
  basic_fingerprint_table<const node_type*, same_node> table;
  std::uint64_t epoch = 0;
  collection_stats stats;

 private:
  std::vector<node_type*> free_;
  mutable std::uint64_t cap_leaves_ = ~std::uint64_t{0};
  mutable std::uint32_t cap_ = 0;

  template <class Init, class Matches>
  ptr intern(fingerprint fp, node_kind kind, std::uint32_t level, std::uint64_t leaves,
             Init&& init, Matches&& matches) {
    ++stats.nodes_built;
    if (const auto* found = table.find(fp)) {
      const node_type* e = *found;
      if (e->kind_ == kind && e->level_ == level && matches(*e)) return ptr(e);
      ++stats.collisions;
      throw collision_detected();
    }
    stats.max_leaves = std::max(stats.max_leaves, leaves);
    if (level > height_cap()) throw rebuild_required(level);

    node_type* n;
    if (free_.empty()) {
      n = new node_type();
    } else {
      n = free_.back();
      free_.pop_back();
    }
    n->kind_ = kind;
    n->level_ = level;
    n->fp_ = fp;
    n->leaf_count_ = leaves;
    n->multiplicity_ = 0;
    n->symbol_ = Symbol{};
    n->owner_ = this;
    ptr result(n);  // owns n from here on
    init(*n);
    const auto r = table.try_register(fp, n);
    DDT_CHECK(r == register_result::registered, "fresh fingerprint rejected");
    ++stats.nodes_allocated;
    stats.max_height = std::max(stats.max_height, level);
    return result;
  }
};

/// Root-to-leaf path into one tree: entry L holds the node at level L, the
/// index of its child on the path, and the node's leftmost leaf position.
/// Entries below the current focus level may be stale.
template <std::integral Symbol>
class finger {
 public:
  using node_type = basic_node<Symbol>;

  struct entry {
    const node_type* node = nullptr;
    std::uint64_t index = 0;
    std::uint64_t left = 0;
  };

  explicit finger(const node_type* root) : path_(root->level() + 1) {
    path_.back() = {root, 0, 0};
  }

  /// Path from the root down to the leaf at `pos`.
  finger(const node_type* root, std::uint64_t pos) : finger(root) {
    for (std::uint32_t lev = root->level(); lev > 0; --lev) {
      entry& e = path_[lev];
      const node_type* n = e.node;
      std::uint64_t offset = pos - e.left;
      if (n->kind() == node_kind::duplicate) {
        e.index = offset / n->child(0)->leaf_count();
        path_[lev - 1] = {n->child(0), 0, e.left + e.index * n->child(0)->leaf_count()};
        continue;
      }
      std::uint64_t left = e.left;
      std::uint64_t i = 0;
      for (;; ++i) {
        const auto lc = n->child(i)->leaf_count();
        if (offset < lc) break;
        offset -= lc;
        left += lc;
      }
      e.index = i;
      path_[lev - 1] = {n->child(i), 0, left};
    }
  }

  std::uint32_t height() const { return static_cast<std::uint32_t>(path_.size() - 1); }
  entry& at(std::uint32_t level) { return path_[level]; }
  const entry& at(std::uint32_t level) const { return path_[level]; }
  const node_type* node(std::uint32_t level) const { return path_[level].node; }
  std::uint64_t left(std::uint32_t level) const { return path_[level].left; }

  /// Moves the focus at `level` to child k of the current node there.
  void descend(std::uint32_t level, std::uint64_t k) {
    entry& e = path_[level];
    e.index = k;
    const node_type* n = e.node;
    std::uint64_t left = e.left;
    if (n->kind() == node_kind::duplicate) {
      left += k * n->child(0)->leaf_count();
    } else {
      for (std::uint64_t i = 0; i < k; ++i) left += n->child(i)->leaf_count();
    }
    path_[level - 1] = {n->child(k), 0, left};
  }

  void descend_leftmost_to(std::uint32_t level) {
    for (std::uint32_t lev = height(); lev > level; --lev) descend(lev, 0);
  }

  /// Replaces the node at `level` by its left neighbour on that level.
  /// Entries from `level` up stay valid; the new node's index points at its
  /// last child. Returns false at the left end of the string.
  bool step_left(std::uint32_t level) {
    std::uint32_t a = level + 1;
    while (a <= height() && path_[a].index == 0) ++a;
    if (a > height()) return false;
    entry& top = path_[a];
    --top.index;
    const node_type* c = top.node->child(top.index);
    path_[a - 1] = {c, c->child_count() == 0 ? 0 : c->child_count() - 1,
                    path_[a - 1].left - c->leaf_count()};
    for (std::uint32_t lev = a - 1; lev > level; --lev) {
      const entry& p = path_[lev];
      const node_type* k = p.node->child(p.index);
      path_[lev - 1] = {k, k->child_count() == 0 ? 0 : k->child_count() - 1,
                        p.left + p.node->leaf_count() - k->leaf_count()};
    }
    return true;
  }

  /// Mirror of step_left; the new node's index points at its first child.
  bool step_right(std::uint32_t level) {
    std::uint32_t a = level + 1;
    while (a <= height() && path_[a].index + 1 >= path_[a].node->child_count()) ++a;
    if (a > height()) return false;
    entry& top = path_[a];
    ++top.index;
    const entry old = path_[a - 1];
    const node_type* c = top.node->child(top.index);
    path_[a - 1] = {c, 0, old.left + old.node->leaf_count()};
    for (std::uint32_t lev = a - 1; lev > level; --lev) {
      const entry& p = path_[lev];
      path_[lev - 1] = {p.node->child(0), 0, p.left};
    }
    return true;
  }

 private:
  std::vector<entry> path_;
};

}  // namespace detail

/// Immutable reference to one version of one string.
template <std::integral Symbol>
class basic_string_handle {
 public:
  using node_type = basic_node<Symbol>;

  basic_string_handle() = default;

  bool valid() const { return static_cast<bool>(root_); }
  std::uint64_t length() const { return root_ ? root_->leaf_count() : 0; }
  fingerprint fp() const { return root_->fp(); }
  std::uint64_t epoch() const { return epoch_; }
  std::uint32_t height() const { return root_->level(); }
  const node_type* root() const { return root_.get(); }

 private:
  friend class basic_collection<Symbol>;

  basic_string_handle(std::shared_ptr<detail::collection_state<Symbol>> state,
                      node_ptr<Symbol> root, std::uint64_t epoch)
      : state_(std::move(state)), root_(std::move(root)), epoch_(epoch) {}

  // Declared first so the nodes are released while the state is alive.
  std::shared_ptr<detail::collection_state<Symbol>> state_;
  node_ptr<Symbol> root_;
  std::uint64_t epoch_ = 0;
};

/// A collection of persistent strings sharing one fingerprint table.
///
/// Positions are 0-based. Every handle-producing operation may throw
/// collision_detected or rebuild_required; both retire the epoch and the
/// caller is expected to reseed and rebuild its strings from scratch.
/// A collection is single-writer.
template <std::integral Symbol = char>
class basic_collection {
 public:
  using symbol_type = Symbol;
  using node_type = basic_node<Symbol>;
  using node_ref = node_ptr<Symbol>;
  using handle = basic_string_handle<Symbol>;

  explicit basic_collection(collection_options opts = {})
      : state_(std::make_shared<detail::collection_state<Symbol>>(opts)) {}
  explicit basic_collection(hash_seed seed)
      : basic_collection(collection_options{.seed = seed}) {}

  hash_seed seed() const { return state_->seed(); }
  std::uint64_t epoch() const { return state_->epoch; }
  const collection_stats& stats() const { return state_->stats; }
  const collection_options& options() const { return state_->options; }
  std::uint32_t height_cap() const { return state_->height_cap(); }
  std::size_t table_size() const { return state_->table.size(); }

  /// Retires the current epoch: the table is emptied and every handle issued
  /// so far becomes unusable for queries against new handles.
  void reseed(hash_seed seed) { state_->reset(seed); }

  std::optional<preimage> lookup(fingerprint fp) const { return state_->lookup(fp); }

  node_ref leaf(Symbol s) { return state_->make_leaf(s); }

  handle new_string(Symbol s) { return wrap(state_->make_leaf(s)); }

  handle from_symbols(std::span<const Symbol> symbols) {
    if (symbols.empty()) throw invalid_input("cannot build an empty string");
    std::vector<detail::run<Symbol>> seq;
    for (std::size_t i = 0; i < symbols.size();) {
      std::size_t k = i + 1;
      while (k < symbols.size() && symbols[k] == symbols[i]) ++k;
      seq.push_back({state_->make_leaf(symbols[i]), k - i});
      i = k;
    }
    std::uint32_t level = 0;
    while (!(seq.size() == 1 && seq.front().count == 1)) {
      seq = state_->group(++level, seq);
    }
    return wrap(std::move(seq.front().node));
  }

  handle from_symbols(std::basic_string_view<Symbol> s)
    requires std::same_as<Symbol, char>
  {
    return from_symbols(std::span<const Symbol>(s.data(), s.size()));
  }

  /// One grouping step over nodes that all sit at level - 1.
  std::vector<node_ref> build_level(std::uint32_t level, std::span<const node_ref> nodes) {
    if (level == 0) throw invalid_input("level 0 is the leaf level");
    std::vector<detail::run<Symbol>> seq;
    for (const auto& n : nodes) {
      if (!n || n->level() + 1 != level) throw invalid_input("node not at level - 1");
      if (n->owner_ != state_.get()) throw epoch_mismatch();
      detail::collection_state<Symbol>::push_run(seq, n, 1);
    }
    if (level % 2 == 0) {
      for (const auto& r : seq) {
        DDT_CHECK(r.count == 1, "adjacent equal nodes at the input of an increasing level");
      }
    }
    std::vector<node_ref> out;
    for (auto& r : state_->group(level, seq)) {
      for (std::uint64_t i = 0; i < r.count; ++i) out.push_back(r.node);
    }
    return out;
  }

  bool equal(const handle& a, const handle& b) const {
    check_pair(a, b);
    return a.fp() == b.fp();
  }

  /// Longest common prefix by synchronized descent: both fingers always sit
  /// on the first node of their level where the two level sequences differ.
  std::uint64_t lcp(const handle& a, const handle& b) const {
    check_pair(a, b);
    if (a.fp() == b.fp()) return a.length();
    const bool a_shallow = a.height() <= b.height();
    const handle& s = a_shallow ? a : b;
    const handle& o = a_shallow ? b : a;
    std::uint32_t level = s.height();
    detail::finger<Symbol> fs(s.root());
    detail::finger<Symbol> fo(o.root());
    fo.descend_leftmost_to(level);
    if (fs.node(level) == fo.node(level)) return s.length();

    for (;; --level) {
      const node_type* p = fs.node(level);
      const node_type* q = fo.node(level);
      DDT_CHECK(p != q && fs.left(level) == fo.left(level), "lcp fingers out of sync");
      if (level == 0) return fs.left(0);
      const std::uint64_t cp = p->child_count();
      const std::uint64_t cq = q->child_count();
      const std::uint64_t common = std::min(cp, cq);
      std::uint64_t k = 0;
      if (p->kind() == node_kind::duplicate) {
        k = p->child(0) == q->child(0) ? common : 0;
      } else {
        while (k < common && p->child(k) == q->child(k)) ++k;
      }
      if (k < common) {
        fs.descend(level, k);
        fo.descend(level, k);
        continue;
      }
      DDT_CHECK(cp != cq, "identical children under different fingerprints");
      // One child list is a proper prefix of the other: the longer side takes
      // child k, the shorter side continues at its right neighbour.
      auto& shorter = cp < cq ? fs : fo;
      auto& longer = cp < cq ? fo : fs;
      longer.descend(level, k);
      const std::uint64_t end = shorter.left(level) + shorter.node(level)->leaf_count();
      if (!shorter.step_right(level)) return end;
      shorter.descend(level, 0);
    }
  }

  Symbol get(const handle& h, std::uint64_t i) const {
    require_valid(h);
    if (i >= h.length()) throw index_out_of_range(i, h.length());
    const node_type* n = h.root();
    while (n->level() > 0) {
      if (n->kind() == node_kind::duplicate) {
        const node_type* c = n->child(0);
        i %= c->leaf_count();
        n = c;
        continue;
      }
      for (const auto& c : n->children()) {
        if (i < c->leaf_count()) {
          n = c.get();
          break;
        }
        i -= c->leaf_count();
      }
    }
    return n->symbol();
  }

  /// Write via two splits, a new leaf and one concatenation; one split when i
  /// is at either end.
  handle set(const handle& h, std::uint64_t i, Symbol s) {
    require_current(h);
    const std::uint64_t n = h.length();
    if (i >= n) throw index_out_of_range(i, n);
    if (n == 1) return new_string(s);
    std::vector<detail::run<Symbol>> middle{{state_->make_leaf(s), 1}};
    if (i == 0) {
      const node_ref right = suffix(h.root(), 1);
      return wrap(rebuild(nullptr, 0, std::move(middle), right.get(), 0));
    }
    if (i == n - 1) {
      const node_ref left = prefix(h.root(), n - 1);
      return wrap(rebuild(left.get(), left->leaf_count(), std::move(middle), nullptr, 0));
    }
    const node_ref left = prefix(h.root(), i);
    const node_ref right = suffix(h.root(), i + 1);
    return wrap(rebuild(left.get(), left->leaf_count(), std::move(middle), right.get(), 0));
  }

  /// (h[0, i), h[i, length)).
  std::pair<handle, handle> split(const handle& h, std::uint64_t i) {
    require_current(h);
    if (i == 0 || i == h.length()) throw split_at_boundary(i);
    if (i > h.length()) throw index_out_of_range(i, h.length());
    return {wrap(prefix(h.root(), i)), wrap(suffix(h.root(), i))};
  }

  handle concatenate(const handle& a, const handle& b) {
    check_pair(a, b);
    require_current(a);
    return wrap(rebuild(a.root(), a.length(), {}, b.root(), 0));
  }

  /// Circular right shift by k: symbol j moves to (j + k) mod length.
  handle rotate(const handle& h, std::uint64_t k) {
    require_current(h);
    const std::uint64_t n = h.length();
    if (k >= n) throw index_out_of_range(k, n);
    if (k == 0) return h;
    const node_ref left = prefix(h.root(), n - k);
    const node_ref right = suffix(h.root(), n - k);
    return wrap(rebuild(right.get(), k, {}, left.get(), 0));
  }

  std::vector<Symbol> to_symbols(const handle& h) const {
    require_valid(h);
    std::vector<Symbol> out;
    out.reserve(h.length());
    append_symbols(h.root(), out);
    return out;
  }

  std::string to_string(const handle& h) const
    requires std::same_as<Symbol, char>
  {
    const auto v = to_symbols(h);
    return {v.begin(), v.end()};
  }

  /// Preorder serialization of the tree shape without fingerprints or
  /// symbols: "L" leaf, "D<level>x<multiplicity>(child)",
  /// "I<level>:<count>[children]".
  std::string shape_digest(const handle& h) const {
    require_valid(h);
    std::string out;
    append_shape(h.root(), out);
    return out;
  }

  /// Graphviz rendering of the tree, one graph node per distinct tree node,
  /// in preorder.
  void write_dot(std::ostream& os, const handle& h) const {
    require_valid(h);
    os << "digraph ddt {\n  node [shape=box, fontname=\"monospace\"];\n";
    std::unordered_set<const node_type*> seen;
    write_dot_node(os, h.root(), seen);
    os << "}\n";
  }

 private:
  using state_type = detail::collection_state<Symbol>;
  using run_type = detail::run<Symbol>;

  handle wrap(node_ref root) const { return handle(state_, std::move(root), state_->epoch); }

  static void require_valid(const handle& h) {
    if (!h.valid()) throw invalid_input("empty string handle");
  }

  void require_current(const handle& h) const {
    require_valid(h);
    if (h.state_ != state_ || h.epoch_ != state_->epoch) throw epoch_mismatch();
  }

  void check_pair(const handle& a, const handle& b) const {
    require_current(a);
    require_current(b);
  }

  node_ref prefix(const node_type* root, std::uint64_t i) { return rebuild(root, i, {}, nullptr, 0); }
  node_ref suffix(const node_type* root, std::uint64_t i) { return rebuild(nullptr, 0, {}, root, i); }

  static node_ref leaf_at(const node_type* root, std::uint64_t pos) {
    detail::finger<Symbol> f(root, pos);
    return node_ref(f.node(0));
  }

  /// Canonical tree of  left[0, x) ++ middle ++ right[y, end).
  ///
  /// Level by level, the result's sequence is an untouched prefix of the left
  /// tree's level, a short rebuilt tail, and an untouched suffix of the right
  /// tree's level. Grouping decisions depend only on adjacent pairs, so at
  /// each level only the group of the left tree ending at the prefix boundary
  /// (and its mirror on the right) must be reopened and regrouped together
  /// with the tail.
  node_ref rebuild(const node_type* left, std::uint64_t x, std::vector<run_type> middle,
                   const node_type* right, std::uint64_t y) {
    const std::uint64_t right_len = right ? right->leaf_count() : 0;
    std::uint64_t middle_len = 0;
    for (const auto& r : middle) middle_len += r.count * r.node->leaf_count();
    const std::uint64_t total = x + middle_len + (right_len - y);
    DDT_CHECK(total > 0, "rebuild of an empty string");
    if (total == 1) {
      if (!middle.empty()) return middle.front().node;
      return x == 1 ? leaf_at(left, 0) : leaf_at(right, y);
    }

    std::optional<detail::finger<Symbol>> lf;
    std::optional<detail::finger<Symbol>> rf;
    if (x > 0) lf.emplace(left, x - 1);
    if (y < right_len) rf.emplace(right, y);

    std::vector<run_type> tail = std::move(middle);
    std::vector<run_type> seq;
    for (std::uint32_t level = 0;; ++level) {
      const bool left_root = x > 0 && level + 1 > left->level();
      const bool right_root = y < right_len && level + 1 > right->level();
      // Untouched neighbours of the tail on this level.
      const node_type* ln = nullptr;
      const node_type* rn = nullptr;
      if (x > 0) {
        DDT_CHECK(!left_root || (level == left->level() && x == left->leaf_count()),
                  "left context lost");
        ln = left_root ? left : lf->at(level + 1).node->child(lf->at(level + 1).index);
      }
      if (y < right_len) {
        DDT_CHECK(!right_root || (level == right->level() && y == 0), "right context lost");
        rn = right_root ? right : rf->at(level + 1).node->child(rf->at(level + 1).index);
      }
      // Root rule: stop at the first level holding a single node, which with
      // skipped groups can be an untouched neighbour alone.
      if (tail.empty()) {
        if (y == right_len && x > 0 && x == ln->leaf_count()) return node_ref(ln);
        if (x == 0 && y < right_len && right_len - y == rn->leaf_count()) return node_ref(rn);
      }
      const node_type* after_ln = !tail.empty() ? tail.front().node.get() : rn;
      const node_type* before_rn = !tail.empty() ? tail.back().node.get() : ln;

      seq.clear();
      // Reopen the left group ending at the prefix boundary, unless it ends
      // there and stays closed against its new right neighbour.
      if (left_root) {
        state_type::push_run(seq, node_ref(left), 1);
        x = 0;
      } else if (x > 0) {
        const auto& e = lf->at(level + 1);
        const bool closed =
            e.index + 1 == e.node->child_count() && breaks(level + 1, ln, after_ln);
        if (!closed) {
          append_children(seq, e.node, 0, e.index + 1);
          x = e.left;
          if (x > 0) DDT_CHECK(lf->step_left(level + 1), "left finger ran off the tree");
        }
      }
      for (auto& r : tail) state_type::push_run(seq, std::move(r.node), r.count);
      if (right_root) {
        state_type::push_run(seq, node_ref(right), 1);
        y = right_len;
      } else if (y < right_len) {
        const auto& e = rf->at(level + 1);
        const bool closed = e.index == 0 && breaks(level + 1, before_rn, rn);
        if (!closed) {
          append_children(seq, e.node, e.index, e.node->child_count());
          y = e.left + e.node->leaf_count();
          if (y < right_len) DDT_CHECK(rf->step_right(level + 1), "right finger ran off the tree");
        }
      }
      tail = state_->group(level + 1, seq);
      if (x == 0 && y == right_len && tail.size() == 1 && tail.front().count == 1) {
        return std::move(tail.front().node);
      }
    }
  }

  /// True if a and b, adjacent on the level below `level`, fall into
  /// different groups. A missing neighbour always breaks.
  static bool breaks(std::uint32_t level, const node_type* a, const node_type* b) {
    if (a == nullptr || b == nullptr) return true;
    if (level % 2 == 1) return a != b;
    return !(a->fp() < b->fp());
  }

  static void append_children(std::vector<run_type>& seq, const node_type* n,
                              std::uint64_t from, std::uint64_t to) {
    if (from >= to) return;
    if (n->kind() == node_kind::duplicate) {
      state_type::push_run(seq, n->children().front(), to - from);
      return;
    }
    for (std::uint64_t i = from; i < to; ++i) state_type::push_run(seq, n->children()[i], 1);
  }

  static void append_symbols(const node_type* n, std::vector<Symbol>& out) {
    switch (n->kind()) {
      case node_kind::leaf:
        out.push_back(n->symbol());
        return;
      case node_kind::duplicate: {
        const std::size_t start = out.size();
        append_symbols(n->child(0), out);
        const std::size_t width = out.size() - start;
        for (std::uint64_t i = 1; i < n->multiplicity(); ++i) {
          for (std::size_t k = 0; k < width; ++k) out.push_back(out[start + k]);
        }
        return;
      }
      case node_kind::increasing:
        for (const auto& c : n->children()) append_symbols(c.get(), out);
        return;
    }
  }

  static void append_shape(const node_type* n, std::string& out) {
    switch (n->kind()) {
      case node_kind::leaf:
        out += 'L';
        return;
      case node_kind::duplicate:
        out += 'D' + std::to_string(n->level()) + 'x' + std::to_string(n->multiplicity()) + '(';
        append_shape(n->child(0), out);
        out += ')';
        return;
      case node_kind::increasing:
        out += 'I' + std::to_string(n->level()) + ':' + std::to_string(n->child_count()) + '[';
        for (const auto& c : n->children()) append_shape(c.get(), out);
        out += ']';
        return;
    }
  }

  static std::string dot_id(const node_type* n) {
    std::ostringstream os;
    os << 'n' << std::hex << std::setw(16) << std::setfill('0') << n->fp().value;
    return os.str();
  }

  static void write_dot_node(std::ostream& os, const node_type* n,
                             std::unordered_set<const node_type*>& seen) {
    if (!seen.insert(n).second) return;
    const std::string id = dot_id(n);
    os << "  " << id << " [label=\"" << n->fp().value << " / " << ddt::to_string(n->kind()) << " / "
       << n->level() << " / " << n->leaf_count();
    if (n->kind() == node_kind::leaf) {
      os << " / sym " << node_type::symbol_bits(n->symbol());
    }
    os << "\"];\n";
    if (n->kind() == node_kind::duplicate) {
      os << "  " << id << " -> " << dot_id(n->child(0)) << " [label=\"x" << n->multiplicity()
         << "\"];\n";
    } else {
      for (const auto& c : n->children()) os << "  " << id << " -> " << dot_id(c.get()) << ";\n";
    }
    for (const auto& c : n->children()) write_dot_node(os, c.get(), seen);
  }

  std::shared_ptr<state_type> state_;
};

using collection = basic_collection<char>;
using string_handle = basic_string_handle<char>;
using node = basic_node<char>;

template <std::integral Symbol>
void node_ptr<Symbol>::acquire() {
  if (p_) ++p_->refs_;
}

template <std::integral Symbol>
void node_ptr<Symbol>::release() {
  if (p_ && --p_->refs_ == 0) p_->owner_->dispose(p_);
  p_ = nullptr;
}

}  // namespace ddt
