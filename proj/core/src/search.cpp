#include "mctd/search.hpp"

#include <cmath>

#include "mctd/error.hpp"
#include "mctd/expansion.hpp"

namespace mctd {

double ph_ucb_me_score(const TreeNode& parent, const TreeNode& child, const RunConfig& cfg) {
  MCTD_EXPECTS(parent.n >= 1, "ph_ucb_me_score: parent has no visits");
  const double bonus = cfg.w_ent * child.u_ent + cfg.w_div * child.u_div + cfg.epsilon_floor;
  const double scale =
      std::sqrt(std::log(static_cast<double>(parent.n))) / (1.0 + static_cast<double>(child.n));
  return child.q + cfg.c_p * scale * bonus;
}

TreeNode& select_leaf(TreeNode& root, const RunConfig& cfg) {
  TreeNode* node = &root;
  while (!node->children.empty() && node->depth < cfg.max_depth) {
    TreeNode* best = nullptr;
    double best_score = 0.0;
    for (const auto& c : node->children) {
      if (c->exhausted) continue;
      const double s = ph_ucb_me_score(*node, *c, cfg);
      if (!best || s > best_score) {  // strict: earliest child wins ties
        best = c.get();
        best_score = s;
      }
    }
    if (!best) break;
    node = best;
  }
  return *node;
}

void backpropagate(TreeNode& leaf_child, double value, BackupRule rule) {
  for (TreeNode* node = &leaf_child; node; node = node->parent) {
    node->n += 1;
    if (rule == BackupRule::max) {
      node->q = std::max(node->q, value);
    } else {
      node->value_sum += value;
      node->q = node->value_sum / static_cast<double>(node->n);
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<std::shared_ptr<Expert>> select_active_experts(
    const RunConfig& cfg, std::vector<std::shared_ptr<Expert>> experts) {
  std::vector<std::shared_ptr<Expert>> active;
  switch (cfg.mode) {
    case Mode::random_no_expert:
      break;
    case Mode::single_expert:
      if (experts.empty()) throw ConfigError("experts", "single_expert mode needs an expert");
      if (cfg.single_expert_index >= experts.size())
        throw ConfigError("single_expert_index", "only " + std::to_string(experts.size()) +
                                                     " expert(s) configured");
      active.push_back(experts[cfg.single_expert_index]);
      break;
    case Mode::multi_expert:
      if (experts.empty()) throw ConfigError("experts", "multi_expert mode needs experts");
      if (experts.size() != cfg.E)
        throw ConfigError("E", "E = " + std::to_string(cfg.E) + " but " +
                                   std::to_string(experts.size()) + " expert(s) configured");
      active = std::move(experts);
      break;
  }
  for (const auto& e : active) {
    if (!e) throw ConfigError("experts", "null expert");
    if (!(e->alphabet() == Alphabet::amino_acids()))
      throw ConfigError("experts", "expert '" + e->id() + "' uses a different alphabet");
  }
  return active;
}

Search::Search(const RunConfig& cfg, Sequence root, std::vector<std::shared_ptr<Expert>> experts,
               CriticPanel panel, std::unique_ptr<ConfidenceProvider> confidence, ReplayLog* log)
    : cfg_(validate_config(cfg)),
      panel_(std::move(panel)),
      confidence_(std::move(confidence)),
      log_(log) {
  MCTD_EXPECTS(!root.empty(), "search: empty root sequence");
  active_ = select_active_experts(cfg_, std::move(experts));
  if (!confidence_) {
    if (active_.empty())
      confidence_ = std::make_unique<RandomConfidence>(cfg_.seed);
    else
      confidence_ = std::make_unique<EnsembleConfidence>(active_);
  }

  root_ = std::make_unique<TreeNode>();
  root_->id = 0;
  root_->sequence = std::move(root);
  const CriticReport report = cache_.evaluate(root_->sequence, panel_);
  root_->q = report.composite;
  if (log_) log_->header(config_hash(cfg_), serialize_config(cfg_), root_->sequence, report);
}

bool Search::step() {
  if (simulations_ >= cfg_.total_simulations || root_->exhausted) return false;

  SimulationRecord rec;
  TreeNode& leaf = select_leaf(*root_, cfg_);
  for (const TreeNode* n = &leaf; n; n = n->parent) rec.path.insert(rec.path.begin(), n->id);
  rec.sim = simulations_;
  rec.leaf = leaf.id;
  rec.depth = leaf.depth;

  if (leaf.terminal || leaf.depth >= cfg_.max_depth) {
    leaf.terminal = true;
  } else {
    ExpansionContext ctx{cfg_, active_, panel_, cache_, *confidence_, next_node_id_};
    ExpansionResult ex = expand(leaf, ctx);
    rec.confidence = ex.confidence.values();
    rec.mask = ex.mask;
    rec.u_ent = ex.u_ent;
    rec.pool_size = ex.pool_size;
    rec.candidates = std::move(ex.candidates);
    if (ex.children.empty()) leaf.terminal = true;
    for (TreeNode* child : ex.children) {
      rec.children.push_back(child->id);
      const double value = child->q;
      backpropagate(*child, value, cfg_.backup_rule);
      rec.backups.push_back({child->id, value});
    }
  }
  leaf.refresh_exhausted();
  rec.terminal = leaf.terminal;
  rec.root_q = root_->q;
  rec.root_n = root_->n;
  ++simulations_;
  if (log_) log_->simulation(rec);
  return true;
}

std::vector<RankedSequence> Search::ranked() const {
  std::vector<RankedSequence> out;
  for (auto& e : cache_.top(cfg_.top_k_return)) out.push_back({Sequence(e.sequence), e.report});
  return out;
}

SearchResult Search::run() {
  while (step()) {
  }
  SearchResult r;
  r.ranked = ranked();
  r.simulations_used = simulations_;
  r.exhausted = root_->exhausted && simulations_ < cfg_.total_simulations;
  r.nodes = count_nodes(*root_);
  r.cache_hits = cache_.hits();
  r.cache_misses = cache_.misses();
  if (log_) log_->result(r.simulations_used, r.exhausted, r.ranked);
  return r;
}

SearchResult run_search(const RunConfig& cfg, const Sequence& root,
                        std::vector<std::shared_ptr<Expert>> experts, const CriticPanel& panel,
                        ReplayLog* log) {
  Search search(cfg, root, std::move(experts), panel, nullptr, log);
  return search.run();
}

}  // namespace mctd
