#include "dml/learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "dml/error.hpp"

namespace dml {

TreeGrower::TreeGrower(const Eigen::MatrixXd& x, std::span<const Index> rows)
    : rows_(rows.begin(), rows.end()), num_features_(static_cast<std::size_t>(x.cols())) {
  const std::size_t m = rows_.size();
  values_.assign(num_features_, std::vector<double>(m));
  order_.assign(num_features_, std::vector<std::uint32_t>(m));
  for (std::size_t j = 0; j < num_features_; ++j) {
    auto& vals = values_[j];
    for (std::size_t s = 0; s < m; ++s) {
      vals[s] = x(static_cast<Eigen::Index>(rows_[s]), static_cast<Eigen::Index>(j));
    }
    auto& ord = order_[j];
    std::iota(ord.begin(), ord.end(), 0u);
    std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
      return vals[a] < vals[b] || (vals[a] == vals[b] && a < b);
    });
  }
}

RegressionTree TreeGrower::grow(const Eigen::VectorXd& y, const TreeOptions& options, Rng* rng) const {
  const std::size_t m = rows_.size();
  if (m == 0) throw Error(ErrorCode::InsufficientData, "tree needs at least one sample");
  const std::size_t min_leaf = std::max<std::size_t>(1, options.min_leaf);
  const bool subsample = options.mtry > 0 && options.mtry < num_features_;
  if (subsample && rng == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "feature subsampling needs a random source");
  }

  std::vector<double> ys(m);
  for (std::size_t s = 0; s < m; ++s) ys[s] = y[static_cast<Eigen::Index>(rows_[s])];

  // One working copy of every ordering; each node owns the same [begin, end)
  // segment in all of them.
  std::vector<std::vector<std::uint32_t>> order = order_;
  std::vector<std::uint32_t> buffer(m);
  std::vector<char> goes_left(m, 0);
  std::vector<std::size_t> features(num_features_);

  RegressionTree tree;
  tree.nodes_.emplace_back();

  struct Task {
    int node;
    std::size_t begin, end, depth;
  };
  std::vector<Task> stack{{0, 0, m, 0}};

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const std::size_t n = task.end - task.begin;

    // Node statistics, summed in a fixed order.
    const auto* seg = order.empty() ? nullptr : order[0].data() + task.begin;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ys[seg ? seg[i] : task.begin + i];
    const double mean = sum / static_cast<double>(n);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[seg ? seg[i] : task.begin + i] - mean;
      sse += r * r;
    }
    {
      TreeNode& node = tree.nodes_[static_cast<std::size_t>(task.node)];
      node.value = mean;
      node.sse = sse;
      node.count = n;
    }
    if (num_features_ == 0 || task.depth >= options.max_depth || n < 2 * min_leaf || !(sse > 0.0)) {
      continue;
    }

    std::size_t num_candidates = num_features_;
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (subsample) {
      for (std::size_t i = 0; i < options.mtry; ++i) {
        std::swap(features[i], features[i + rng->index(num_features_ - i)]);
      }
      num_candidates = options.mtry;
      std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(num_candidates));
    }

    // With residuals r centered at the node mean, splitting after nl samples
    // reduces SSE by S_l^2 * n / (nl * nr), S_l the left residual sum.
    double best_gain = 0.0;
    std::size_t best_feature = 0, best_count = 0;
    double best_threshold = 0.0;
    for (std::size_t c = 0; c < num_candidates; ++c) {
      const std::size_t f = features[c];
      const auto* ord = order[f].data() + task.begin;
      const auto& vals = values_[f];
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += ys[ord[i]] - mean;
        const std::size_t nl = i + 1;
        if (nl < min_leaf) continue;
        const std::size_t nr = n - nl;
        if (nr < min_leaf) break;
        const double lo = vals[ord[i]], hi = vals[ord[i + 1]];
        if (!(lo < hi)) continue;
        const double gain = left_sum * left_sum * static_cast<double>(n) /
                            (static_cast<double>(nl) * static_cast<double>(nr));
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_count = nl;
          double mid = lo + 0.5 * (hi - lo);
          if (!(mid < hi)) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (!(best_gain > 1e-10 * sse)) continue;

    {
      const auto* ord = order[best_feature].data() + task.begin;
      for (std::size_t i = 0; i < n; ++i) goes_left[ord[i]] = i < best_count;
    }
    for (std::size_t j = 0; j < num_features_; ++j) {
      auto* ord = order[j].data() + task.begin;
      std::size_t l = 0, r = best_count;
      for (std::size_t i = 0; i < n; ++i) {
        if (goes_left[ord[i]]) buffer[l++] = ord[i];
        else buffer[r++] = ord[i];
      }
      std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(n), ord);
    }

    const int left = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    tree.nodes_.emplace_back();
    TreeNode& node = tree.nodes_[static_cast<std::size_t>(task.node)];
    node.feature = static_cast<int>(best_feature);
    node.threshold = best_threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, task.begin + best_count, task.end, task.depth + 1});
    stack.push_back({left, task.begin, task.begin + best_count, task.depth + 1});
  }
  return tree;
}

RegressionTree RegressionTree::grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    std::span<const Index> rows, const TreeOptions& options, Rng* rng) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  return TreeGrower(x, rows).grow(y, options, rng);
}

RegressionTree RegressionTree::grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const TreeOptions& options) {
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return grow(x, y, rows, options, nullptr);
}

double RegressionTree::predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = static_cast<std::size_t>(x(row, node.feature) <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[r] = predict_row(x, r);
  return out;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double RegressionTree::training_sse() const {
  double total = 0.0;
  for (const auto& n : nodes_) {
    if (n.is_leaf()) total += n.sse;
  }
  return total;
}

PruningPath RegressionTree::pruning_path() const {
  const std::size_t count = nodes_.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  PruningPath path;
  path.node_alpha.assign(count, inf);

  std::vector<double> subtree_sse(count);
  std::vector<double> leaves(count);
  std::vector<double> link(count);
  std::vector<char> live(count);
  double previous = 0.0;

  while (true) {
    // Children always have larger indices than their parent.
    std::fill(live.begin(), live.end(), 0);
    live[0] = 1;
    for (std::size_t t = 0; t < count; ++t) {
      if (!live[t] || nodes_[t].is_leaf() || path.node_alpha[t] != inf) continue;
      live[static_cast<std::size_t>(nodes_[t].left)] = 1;
      live[static_cast<std::size_t>(nodes_[t].right)] = 1;
    }
    double weakest = inf;
    for (std::size_t t = count; t-- > 0;) {
      if (!live[t]) continue;
      const TreeNode& node = nodes_[t];
      if (node.is_leaf() || path.node_alpha[t] != inf) {
        subtree_sse[t] = node.sse;
        leaves[t] = 1.0;
        continue;
      }
      const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
      subtree_sse[t] = subtree_sse[l] + subtree_sse[r];
      leaves[t] = leaves[l] + leaves[r];
      link[t] = std::max(0.0, (node.sse - subtree_sse[t]) / (leaves[t] - 1.0));
      weakest = std::min(weakest, link[t]);
    }
    if (weakest == inf) break;

    const double alpha = std::max(weakest, previous);
    const double cutoff = weakest + 1e-12 * std::max(1.0, weakest);
    for (std::size_t t = 0; t < count; ++t) {
      if (live[t] && !nodes_[t].is_leaf() && path.node_alpha[t] == inf && link[t] <= cutoff) {
        path.node_alpha[t] = alpha;
      }
    }
    if (path.alphas.empty() || alpha > path.alphas.back()) path.alphas.push_back(alpha);
    previous = alpha;
  }
  return path;
}

Eigen::VectorXd RegressionTree::predict_pruned(const Eigen::MatrixXd& x, const PruningPath& path,
                                               double alpha) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf() && path.node_alpha[i] > alpha) {
      const TreeNode& node = nodes_[i];
      i = static_cast<std::size_t>(x(r, node.feature) <= node.threshold ? node.left : node.right);
    }
    out[r] = nodes_[i].value;
  }
  return out;
}

RegressionTree RegressionTree::pruned(double alpha) const {
  const PruningPath path = pruning_path();
  RegressionTree out;
  // Depth-first copy; collapsed nodes become leaves.
  struct Item {
    std::size_t src;
    int dst;
  };
  out.nodes_.push_back(nodes_[0]);
  std::vector<Item> stack{{0, 0}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const TreeNode& src = nodes_[item.src];
    if (src.is_leaf() || path.node_alpha[item.src] <= alpha) {
      TreeNode& dst = out.nodes_[static_cast<std::size_t>(item.dst)];
      dst.left = dst.right = dst.feature = -1;
      dst.threshold = 0.0;
      continue;
    }
    const int left = static_cast<int>(out.nodes_.size());
    out.nodes_.push_back(nodes_[static_cast<std::size_t>(src.left)]);
    out.nodes_.push_back(nodes_[static_cast<std::size_t>(src.right)]);
    out.nodes_[static_cast<std::size_t>(item.dst)].left = left;
    out.nodes_[static_cast<std::size_t>(item.dst)].right = left + 1;
    stack.push_back({static_cast<std::size_t>(src.right), left + 1});
    stack.push_back({static_cast<std::size_t>(src.left), left});
  }
  return out;
}

FittedModel fit_tree_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, std::uint64_t seed) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw Error(ErrorCode::InsufficientData, "tree needs at least 2 rows");

  TreeOptions options;
  options.min_leaf = static_cast<std::size_t>(spec.param("min_leaf", 5));
  options.max_depth = static_cast<std::size_t>(spec.param("max_depth", 64));

  TrainingDiagnostics diag;
  RegressionTree full = RegressionTree::grow(x, y, options);
  double alpha = 0.0;
  const std::size_t cv_folds = std::min<std::size_t>(static_cast<std::size_t>(spec.param("cv_folds", 10)), n);

  if (spec.has("ccp_alpha")) {
    alpha = spec.param("ccp_alpha", 0.0);
  } else if (cv_folds >= 2) {
    const PruningPath path = full.pruning_path();
    // One representative penalty per subtree in the sequence: geometric
    // midpoints between consecutive collapse penalties.
    std::vector<double> candidates{0.0};
    for (std::size_t k = 0; k + 1 < path.alphas.size(); ++k) {
      candidates.push_back(std::sqrt(path.alphas[k] * path.alphas[k + 1]));
    }
    if (!path.alphas.empty()) candidates.push_back(path.alphas.back());

    std::vector<double> cv_sse(candidates.size(), 0.0);
    const FoldPartition partition = make_partition(n, cv_folds, derive_seed(seed, 0));
    for (std::size_t k = 0; k < cv_folds; ++k) {
      const IndexList train = partition.complement(k);
      const IndexList test = partition.fold(k);
      const RegressionTree fold_tree = RegressionTree::grow(x, y, train, options);
      const PruningPath fold_path = fold_tree.pruning_path();
      const Eigen::MatrixXd x_test = select_rows(x, test);
      const Eigen::VectorXd y_test = select_rows(y, test);
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        cv_sse[c] += (y_test - fold_tree.predict_pruned(x_test, fold_path, candidates[c])).squaredNorm();
      }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      if (cv_sse[c] <= cv_sse[best]) best = c;  // ties favour the smaller tree
    }
    alpha = candidates[best];
    diag.cv_mse = cv_sse[best] / static_cast<double>(n);
  }

  auto tree = std::make_shared<RegressionTree>(alpha > 0.0 ? full.pruned(alpha) : std::move(full));
  diag.tuning["ccp_alpha"] = alpha;
  diag.tuning["leaves"] = static_cast<double>(tree->leaf_count());
  diag.in_sample_mse = tree->training_sse() / static_cast<double>(n);
  return FittedModel(std::move(tree), spec.task, static_cast<std::size_t>(x.cols()), std::move(diag));
}

}  // namespace dml
