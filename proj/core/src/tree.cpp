#include "mctd/tree.hpp"

namespace mctd {

TreeNode& TreeNode::add_child(std::uint64_t child_id, Sequence child_sequence, double reward,
                              double ent, double div, std::optional<Provenance> from) {
  auto child = std::make_unique<TreeNode>();
  child->id = child_id;
  child->sequence = std::move(child_sequence);
  child->depth = depth + 1;
  child->q = reward;
  child->u_ent = ent;
  child->u_div = div;
  child->provenance = std::move(from);
  child->parent = this;
  children.push_back(std::move(child));
  return *children.back();
}

void TreeNode::refresh_exhausted() noexcept {
  for (TreeNode* node = this; node; node = node->parent) {
    bool all_done = !node->children.empty();
    for (const auto& c : node->children) all_done &= c->exhausted;
    const bool now = node->terminal || all_done;
    if (now == node->exhausted && node != this) break;
    node->exhausted = now;
  }
}

std::size_t count_nodes(const TreeNode& root) {
  std::size_t n = 0;
  for_each_node(root, [&](const TreeNode&) { ++n; });
  return n;
}

}  // namespace mctd
