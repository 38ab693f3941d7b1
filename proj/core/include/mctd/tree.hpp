#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mctd/sequence.hpp"

namespace mctd {

struct Provenance {
  std::string expert_id;
  std::size_t rollout = 0;
};

/// Search-tree node: a complete sequence plus its statistics. `n` doubles as
/// N(s) when the node is a parent and as N(s, a) when it is a child.
struct TreeNode {
  std::uint64_t id = 0;
  Sequence sequence;
  std::size_t depth = 0;
  double q = 0.0;
  double value_sum = 0.0;  // running total for mean ("sum") backup
  std::size_t n = 0;
  double u_ent = 0.0;
  double u_div = 0.0;
  /// Cannot be expanded (max depth reached or no new candidates).
  bool terminal = false;
  /// Terminal, or expanded and every child exhausted. Selection skips it.
  bool exhausted = false;
  std::optional<Provenance> provenance;
  TreeNode* parent = nullptr;
  std::vector<std::unique_ptr<TreeNode>> children;

  bool is_leaf() const noexcept { return children.empty(); }

  TreeNode& add_child(std::uint64_t child_id, Sequence child_sequence, double reward,
                      double ent, double div, std::optional<Provenance> from);

  /// Recomputes `exhausted` from this node up to the root.
  void refresh_exhausted() noexcept;
};

/// Pre-order traversal.
template <class Fn>
void for_each_node(const TreeNode& node, Fn&& fn) {
  fn(node);
  for (const auto& c : node.children) for_each_node(*c, fn);
}

std::size_t count_nodes(const TreeNode& root);

}  // namespace mctd
