#pragma once

#include <array>
#include <vector>

#include "energynet/cost_model.hpp"

namespace fixtures {

using energynet::EnergyNetwork;
using energynet::Vector;

/// Six-node case study built directly from the published parameters,
/// independently of the bundled scenario file.
inline const std::array<double, 6> kCaseXi{10, 15, 12, 10, 10, 15};
inline const std::array<double, 6> kCaseMinimumNumerator{412, 378, 550, 722, 257, 533};  // over 31
inline const std::array<double, 6> kCaseDesired{5, 15, 20, 30, 2, 20};

/// Canonical edge order (lexicographic, 1-based): 1-2, 1-5, 2-3, 3-4, 3-5, 4-5, 4-6.
inline const std::array<std::pair<int, int>, 7> kCaseEdges{{{1, 2}, {1, 5}, {2, 3}, {3, 4}, {3, 5}, {4, 5}, {4, 6}}};
inline const std::array<double, 7> kCaseAlpha{5, 4, 7, 3, 6, 8, 7};

/// Published generation and flows in canonical edge order.
inline const std::array<double, 6> kPrintedGeneration{13.2903, 12.1935, 17.7419, 23.2903, 8.2903, 17.1935};
inline const std::array<double, 7> kPrintedFlows{-4.9972, -3.2888, -2.1840, -4.4449, 4.5182, 5.0548, -2.7919};
inline const std::array<double, 6> kPrintedJointGeneration{9.9318, 12.2600, 18.6629, 25.6667, 6.1108, 19.3678};
inline const std::array<double, 7> kPrintedJointFlows{-3.4592, -1.4750, -0.7190, -2.1203, 2.7364, 2.8468,
                                                      -0.6328};

/// Solution of the undirected-variable QP with the integer desired levels,
/// frozen from reference_qp.hpp (checked against it in test_reference.cpp).
inline const std::array<double, 7> kRefDecoupledFlows{-4.996869631609, -3.293452949036, -2.190418018706,
                                                      -4.454597251384, 4.522243748807,  5.061531780874,
                                                      -2.806451612903};
inline constexpr double kRefDecoupledFlowCost = 1288.1105298422513;
inline const std::array<double, 6> kRefJointGeneration{9.932449723883,  12.260176338379, 18.663210065381,
                                                       25.666419992133, 6.110357676041,  19.367386204184};
inline const std::array<double, 7> kRefJointFlows{-3.458814783685, -1.473634940197, -0.718991122064,
                                                  -2.119279856126, 2.737078668681,  2.846913947558,
                                                  -0.632613795816};
inline constexpr double kRefJointFlowCost = 396.31647072303025;
inline constexpr double kRefJointGenerationCostIncrease = 297.8690745014601;

inline Vector case_generation_minimum() {
  Vector v(6);
  for (int i = 0; i < 6; ++i) v(i) = kCaseMinimumNumerator[i] / 31.0;
  return v;
}

inline Vector case_desired() { return Eigen::Map<const Vector>(kCaseDesired.data(), 6); }

inline EnergyNetwork case_study() {
  std::vector<std::pair<int, int>> edges;
  for (const auto& [a, b] : kCaseEdges) edges.emplace_back(a - 1, b - 1);
  EnergyNetwork net;
  net.graph = energynet::Graph(6, edges);
  const Vector minimum = case_generation_minimum();
  for (int i = 0; i < 6; ++i) net.generation.push_back(energynet::params_from_minimum(kCaseXi[i], minimum(i), 0.0));
  for (int e = 0; e < 7; ++e) net.flow.push_back({kCaseAlpha[e], 0.01, 0.0});
  return net;
}

/// Two nodes, xi = (1,1), zeta = eta = 0, alpha = 1, beta = 0.
inline EnergyNetwork two_node(double alpha = 1.0) {
  EnergyNetwork net;
  net.graph = energynet::Graph(2, {{0, 1}});
  net.generation = {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  net.flow = {{alpha, 0.0, 0.0}};
  return net;
}

inline EnergyNetwork path(int n, double xi = 1.0, double alpha = 1.0) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  EnergyNetwork net;
  net.graph = energynet::Graph(n, edges);
  net.generation.assign(n, {xi, 0.0, 0.0});
  net.flow.assign(edges.size(), {alpha, 0.0, 0.0});
  return net;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

}  // namespace fixtures
