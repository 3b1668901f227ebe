#pragma once

#include <Eigen/Core>

#include "stann/montage.hpp"

namespace stann {

// Spatial sensor graph together with the spectral data used for filtering.
struct SensorGraph {
  int n = 0;
  int k_neighbors = 0;
  Eigen::MatrixXd adjacency;     // symmetric, zero diagonal, inverse-distance weights
  Eigen::MatrixXd laplacian;     // D - A
  Eigen::VectorXd eigenvalues;   // ascending; 0 is always first
  Eigen::MatrixXd eigenvectors;  // orthonormal columns matching eigenvalues
};

// Ideal low-pass spectral filter: keep the first `bandwidth` coefficients.
struct GraphFilter {
  int bandwidth = 0;
  Eigen::VectorXd mask;  // length n, prefix of ones then zeros
};

GraphFilter make_lowpass_filter(int bandwidth, int n);

// Paper-style default cutoff: half of the spectrum.
inline int default_bandwidth(int n) { return n / 2; }

// k nearest neighbours by Euclidean distance, union-symmetrized, with
// inverse-distance weights. Distance ties are broken by ascending sensor
// index. Coinciding sensors are rejected as a degenerate montage.
SensorGraph build_knn_adjacency(const Montage& montage, int k);

// Combinatorial Laplacian L = D - A for a symmetric nonnegative adjacency
// with zero diagonal.
Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency);

// Symmetric eigendecomposition with eigenvalues ascending. Each eigenvector
// is oriented so its largest-magnitude entry (lowest index on ties) is
// positive.
void eig_sym(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
             Eigen::MatrixXd& eigenvectors);

// Graph Fourier transform of channel-major signals (x is n x T) and its
// inverse.
Eigen::MatrixXd gft(const Eigen::MatrixXd& x, const SensorGraph& graph);
Eigen::MatrixXd igft(const Eigen::MatrixXd& coeffs, const SensorGraph& graph);

// Orthogonal projection of every column of x onto the span of the first
// `bandwidth` Laplacian eigenvectors. Warns on stderr when a repeated
// eigenvalue straddles the cutoff.
Eigen::MatrixXd lowpass_smooth(const Eigen::MatrixXd& x, const SensorGraph& graph,
                               int bandwidth);

}  // namespace stann
