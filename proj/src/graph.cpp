#include "energynet/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "energynet/errors.hpp"

namespace energynet {

namespace {

std::string edge_name(int a, int b) {
  std::ostringstream out;
  out << "(" << a + 1 << "," << b + 1 << ")";
  return out.str();
}

}  // namespace

Graph::Graph(int node_count, const std::vector<std::pair<int, int>>& edges)
    : node_count_(node_count), incident_(node_count > 0 ? node_count : 0) {
  std::vector<std::string> violations;
  if (node_count < 1) violations.push_back("graph must have at least one node");

  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count || b >= node_count) {
      violations.push_back("edge " + edge_name(a, b) + " references a missing node");
      continue;
    }
    if (a == b) {
      violations.push_back("self-loop at node " + std::to_string(a + 1));
      continue;
    }
    edges_.push_back(EdgeKey::canonical(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  for (std::size_t e = 1; e < edges_.size(); ++e) {
    if (edges_[e] == edges_[e - 1]) {
      violations.push_back("duplicate edge " + edge_name(edges_[e].first, edges_[e].second));
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));

  for (int e = 0; e < edge_count(); ++e) {
    const auto [i, j] = edges_[e];
    incident_[i].push_back({e, j, +1});
    incident_[j].push_back({e, i, -1});
  }
  for (auto& list : incident_) {
    std::sort(list.begin(), list.end(),
              [](const Incidence& x, const Incidence& y) { return x.neighbor < y.neighbor; });
  }
}

std::vector<int> Graph::neighbors(int node) const {
  std::vector<int> out;
  out.reserve(incident_[node].size());
  for (const auto& inc : incident_[node]) out.push_back(inc.neighbor);
  return out;
}

std::optional<int> Graph::edge_index(int a, int b) const {
  const auto key = EdgeKey::canonical(a, b);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<int>(it - edges_.begin());
}

std::optional<double> EdgeWeightMap::find(int a, int b) const {
  const auto it = weights_.find(EdgeKey::canonical(a, b));
  if (it == weights_.end()) return std::nullopt;
  return it->second;
}

bool is_connected(const Graph& graph) {
  const int n = graph.node_count();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& inc : graph.incident(v)) {
      if (!seen[inc.neighbor]) {
        seen[inc.neighbor] = 1;
        ++reached;
        stack.push_back(inc.neighbor);
      }
    }
  }
  return reached == n;
}

Matrix weighted_laplacian(const Graph& graph, const EdgeWeightMap& weights) {
  const int n = graph.node_count();
  Matrix lap = Matrix::Zero(n, n);
  std::vector<std::string> violations;
  for (const auto& [i, j] : graph.edges()) {
    const auto w = weights.find(i, j);
    if (!w) {
      violations.push_back("missing weight for edge " + edge_name(i, j));
      continue;
    }
    if (!(*w > 0.0)) {
      violations.push_back("nonpositive weight for edge " + edge_name(i, j));
      continue;
    }
    lap(i, j) -= *w;
    lap(j, i) -= *w;
    lap(i, i) += *w;
    lap(j, j) += *w;
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return lap;
}

Matrix laplacian(const Graph& graph) {
  EdgeWeightMap unit;
  for (const auto& [i, j] : graph.edges()) unit.set(i, j, 1.0);
  return weighted_laplacian(graph, unit);
}

Matrix incidence_matrix(const Graph& graph) {
  Matrix h = Matrix::Zero(graph.node_count(), graph.edge_count());
  for (int e = 0; e < graph.edge_count(); ++e) {
    h(graph.edges()[e].first, e) = 1.0;
    h(graph.edges()[e].second, e) = -1.0;
  }
  return h;
}

Matrix complete_graph_laplacian(std::span<const double> xi) {
  const auto n = static_cast<Eigen::Index>(xi.size());
  std::vector<std::string> violations;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(xi[i] > 0.0)) violations.push_back("xi of node " + std::to_string(i + 1) + " must be positive");
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));

  const double inv_sum = std::accumulate(xi.begin(), xi.end(), 0.0,
                                         [](double acc, double x) { return acc + 1.0 / x; });
  Matrix lap = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = 1.0 / (2.0 * xi[i] * xi[j] * inv_sum);
      lap(i, j) = lap(j, i) = -w;
      lap(i, i) += w;
      lap(j, j) += w;
    }
  }
  return lap;
}

double algebraic_connectivity(const Matrix& laplacian) {
  if (laplacian.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(1);
}

double spectral_radius_bound(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace energynet
