#include "stann/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include <Eigen/Dense>

#include "stann/errors.hpp"

namespace stann {

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw ArgumentError(std::string(what) + ": matrix is not square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ArgumentError(std::string(what) + ": matrix is not symmetric");
  }
}

}  // namespace

GraphFilter make_lowpass_filter(int bandwidth, int n) {
  if (n < 1) throw ArgumentError("lowpass filter: graph size must be positive");
  if (bandwidth < 1 || bandwidth > n) {
    throw ArgumentError("lowpass filter: bandwidth " + std::to_string(bandwidth) +
                        " outside [1, " + std::to_string(n) + "]");
  }
  GraphFilter f;
  f.bandwidth = bandwidth;
  f.mask = Eigen::VectorXd::Zero(n);
  f.mask.head(bandwidth).setOnes();
  return f;
}

SensorGraph build_knn_adjacency(const Montage& montage, int k) {
  const int n = montage.size();
  if (k < 1 || k > n - 1) {
    throw ArgumentError("knn graph: k " + std::to_string(k) + " outside [1, " +
                        std::to_string(n - 1) + "]");
  }

  const Eigen::MatrixXd pos = montage.positions();
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (pos.row(i) - pos.row(j)).norm();
      if (d <= 0.0) {
        throw DataError("knn graph: degenerate montage, sensors '" +
                        montage.sensor(i).label + "' and '" + montage.sensor(j).label +
                        "' coincide");
      }
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  SensorGraph g;
  g.n = n;
  g.k_neighbors = k;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n) - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    // Ties in distance go to the lower sensor index.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;
    });
    for (int m = 0; m < k; ++m) {
      const int j = order[static_cast<std::size_t>(m)];
      const double w = 1.0 / dist(i, j);
      g.adjacency(i, j) = w;
      g.adjacency(j, i) = w;
    }
  }

  g.laplacian = graph_laplacian(g.adjacency);
  eig_sym(g.laplacian, g.eigenvalues, g.eigenvectors);
  return g;
}

Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency) {
  require_symmetric(adjacency, "laplacian");
  for (int i = 0; i < adjacency.rows(); ++i) {
    if (adjacency(i, i) != 0.0) {
      throw ArgumentError("laplacian: adjacency diagonal must be zero");
    }
    for (int j = 0; j < adjacency.cols(); ++j) {
      if (adjacency(i, j) < 0.0) {
        throw ArgumentError("laplacian: adjacency weights must be nonnegative");
      }
    }
  }
  const Eigen::VectorXd degrees = adjacency.rowwise().sum();
  Eigen::MatrixXd laplacian = -adjacency;
  laplacian.diagonal() += degrees;
  return laplacian;
}

void eig_sym(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
             Eigen::MatrixXd& eigenvectors) {
  require_symmetric(sym, "eig");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eig: eigendecomposition failed to converge");
  }
  eigenvalues = solver.eigenvalues();
  eigenvectors = solver.eigenvectors();
  // Fix each eigenvector's sign: largest-magnitude entry (lowest index on
  // ties) must be positive.
  for (int c = 0; c < eigenvectors.cols(); ++c) {
    int pivot = 0;
    double best = -1.0;
    for (int r = 0; r < eigenvectors.rows(); ++r) {
      const double mag = std::abs(eigenvectors(r, c));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (eigenvectors(pivot, c) < 0.0) eigenvectors.col(c) = -eigenvectors.col(c);
  }
}

Eigen::MatrixXd gft(const Eigen::MatrixXd& x, const SensorGraph& graph) {
  if (x.rows() != graph.n) {
    throw ArgumentError("gft: signal has " + std::to_string(x.rows()) +
                        " rows, graph has " + std::to_string(graph.n) + " vertices");
  }
  return graph.eigenvectors.transpose() * x;
}

Eigen::MatrixXd igft(const Eigen::MatrixXd& coeffs, const SensorGraph& graph) {
  if (coeffs.rows() != graph.n) {
    throw ArgumentError("igft: coefficients have " + std::to_string(coeffs.rows()) +
                        " rows, graph has " + std::to_string(graph.n) + " vertices");
  }
  return graph.eigenvectors * coeffs;
}

Eigen::MatrixXd lowpass_smooth(const Eigen::MatrixXd& x, const SensorGraph& graph,
                               int bandwidth) {
  const GraphFilter filter = make_lowpass_filter(bandwidth, graph.n);
  if (x.rows() != graph.n) {
    throw ArgumentError("smooth: signal has " + std::to_string(x.rows()) +
                        " rows, graph has " + std::to_string(graph.n) + " vertices");
  }
  if (bandwidth < graph.n &&
      std::abs(graph.eigenvalues(bandwidth) - graph.eigenvalues(bandwidth - 1)) < 1e-10) {
    std::cerr << "warning: smoothing cutoff splits a repeated eigenvalue ("
              << graph.eigenvalues(bandwidth - 1) << "); projection depends on solver basis"
              << std::endl;
  }
  const auto basis = graph.eigenvectors.leftCols(filter.bandwidth);
  return basis * (basis.transpose() * x);
}

}  // namespace stann
