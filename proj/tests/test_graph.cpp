#include <cmath>
#include <vector>

#include "doctest.h"

#include "stann/errors.hpp"
#include "stann/graph.hpp"
#include "stann/montage.hpp"
#include "stann/rng.hpp"

using namespace stann;

namespace {

Montage line_montage() {
  // Four sensors on a line at x = 0, 1, 2, 4.
  return Montage({{"A", 0, 0, 0}, {"B", 1, 0, 0}, {"C", 2, 0, 0}, {"D", 4, 0, 0}});
}

Montage random_montage(int n, Rng& rng) {
  std::vector<Sensor> sensors;
  for (int i = 0; i < n; ++i) {
    sensors.push_back({"S" + std::to_string(i), rng.uniform(-1.0, 1.0),
                       rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  }
  return Montage(sensors);
}

}  // namespace

TEST_CASE("knn adjacency on a hand-checked line of sensors") {
  // k = 1 nearest neighbours: A->B, B->A (tie with C broken toward the lower
  // index), C->B, D->C. The union keeps edges A-B (d=1), B-C (d=1, from C's
  // side), C-D (d=2), weighted by inverse distance.
  const SensorGraph g = build_knn_adjacency(line_montage(), 1);
  CHECK(g.n == 4);
  CHECK(g.adjacency(0, 1) == doctest::Approx(1.0));
  CHECK(g.adjacency(1, 2) == doctest::Approx(1.0));
  CHECK(g.adjacency(2, 3) == doctest::Approx(0.5));
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.adjacency(0, 3) == 0.0);
  CHECK(g.adjacency(1, 3) == 0.0);
  CHECK(g.adjacency == g.adjacency.transpose().eval());
  for (int i = 0; i < 4; ++i) CHECK(g.adjacency(i, i) == 0.0);
}

TEST_CASE("laplacian of the weighted line matches the definition") {
  const SensorGraph g = build_knn_adjacency(line_montage(), 1);
  Eigen::MatrixXd expected(4, 4);
  expected << 1.0, -1.0, 0.0, 0.0,
      -1.0, 2.0, -1.0, 0.0,
      0.0, -1.0, 1.5, -0.5,
      0.0, 0.0, -0.5, 0.5;
  CHECK((g.laplacian - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("eigendecomposition of the path graph matches hand values") {
  // Unweighted path on 3 vertices: eigenvalues 0, 1, 3 with known vectors.
  Eigen::MatrixXd a(3, 3);
  a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const Eigen::MatrixXd lap = graph_laplacian(a);
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  eig_sym(lap, values, vectors);

  CHECK(values(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(values(1) == doctest::Approx(1.0));
  CHECK(values(2) == doctest::Approx(3.0));

  const double s3 = 1.0 / std::sqrt(3.0);
  const double s2 = 1.0 / std::sqrt(2.0);
  const double s6 = 1.0 / std::sqrt(6.0);
  // Sign rule: the largest-magnitude entry (lowest index on ties) is positive.
  // v0 is all-positive either way; v2 has a unique largest entry, so both are
  // fully determined. v1's two extreme entries tie in magnitude, so floating
  // point decides the tie and only the direction is pinned down.
  Eigen::Vector3d v0(s3, s3, s3);
  Eigen::Vector3d v1(s2, 0.0, -s2);
  Eigen::Vector3d v2(-s6, 2.0 * s6, -s6);
  CHECK((vectors.col(0) - v0).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-10));
  const double v1_diff = std::min((vectors.col(1) - v1).cwiseAbs().maxCoeff(),
                                  (vectors.col(1) + v1).cwiseAbs().maxCoeff());
  CHECK(v1_diff == doctest::Approx(0.0).epsilon(1e-10));
  CHECK((vectors.col(2) - v2).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("spectral properties hold on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(13));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const SensorGraph g = build_knn_adjacency(random_montage(n, rng), k);

    CHECK((g.adjacency - g.adjacency.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // Orthonormal eigenvectors.
    const Eigen::MatrixXd gram = g.eigenvectors.transpose() * g.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

    // Ascending eigenvalues, PSD, constant vector in the null space.
    for (int i = 1; i < n; ++i) CHECK(g.eigenvalues(i) >= g.eigenvalues(i - 1) - 1e-12);
    CHECK(g.eigenvalues(0) > -1e-10);
    CHECK(std::abs(g.eigenvalues(0)) < 1e-9);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    CHECK((g.laplacian * ones).cwiseAbs().maxCoeff() < 1e-10);

    // Parseval and perfect reconstruction.
    const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(
        n, 5, [&rng](Eigen::Index, Eigen::Index) { return rng.uniform(-2.0, 2.0); });
    const Eigen::MatrixXd coeffs = gft(x, g);
    CHECK(std::abs(coeffs.squaredNorm() - x.squaredNorm()) < 1e-8 * (1.0 + x.squaredNorm()));
    CHECK((igft(coeffs, g) - x).cwiseAbs().maxCoeff() < 1e-10);

    // Full-band smoothing is the identity; smoothing is idempotent; the
    // smoothed signal is no rougher than the input.
    CHECK((lowpass_smooth(x, g, n) - x).cwiseAbs().maxCoeff() < 1e-10);
    const int bw = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const Eigen::MatrixXd xs = lowpass_smooth(x, g, bw);
    CHECK((lowpass_smooth(xs, g, bw) - xs).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::VectorXd col = x.col(0);
    const Eigen::VectorXd cols = xs.col(0);
    const double rough_before = col.dot(g.laplacian * col);
    const double rough_after = cols.dot(g.laplacian * cols);
    CHECK(rough_after <= rough_before + 1e-10);
  }
}

TEST_CASE("smoothing keeps only the chosen spectrum prefix") {
  Rng rng(11);
  const SensorGraph g = build_knn_adjacency(random_montage(6, rng), 2);
  // A signal made of the 2nd eigenvector survives bandwidth 2 and dies at 1.
  const Eigen::MatrixXd x = g.eigenvectors.col(1);
  CHECK((lowpass_smooth(x, g, 2) - x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(lowpass_smooth(x, g, 1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lowpass filter mask is a prefix of ones") {
  const GraphFilter f = make_lowpass_filter(3, 5);
  CHECK(f.bandwidth == 3);
  CHECK(f.mask.size() == 5);
  CHECK(f.mask.head(3).minCoeff() == 1.0);
  CHECK(f.mask.tail(2).maxCoeff() == 0.0);
  CHECK_THROWS_AS(make_lowpass_filter(0, 5), ArgumentError);
  CHECK_THROWS_AS(make_lowpass_filter(6, 5), ArgumentError);
}

TEST_CASE("default bandwidth is half the sensor count") {
  CHECK(default_bandwidth(8) == 4);
  CHECK(default_bandwidth(32) == 16);
  CHECK(default_bandwidth(5) == 2);
}

TEST_CASE("degenerate montages and bad arguments are rejected") {
  CHECK_THROWS_AS(build_knn_adjacency(line_montage(), 0), ArgumentError);
  CHECK_THROWS_AS(build_knn_adjacency(line_montage(), 4), ArgumentError);

  const Montage coincident({{"A", 0, 0, 0}, {"B", 0, 0, 0}, {"C", 1, 0, 0}});
  CHECK_THROWS_AS(build_knn_adjacency(coincident, 1), DataError);
  CHECK_THROWS_WITH_AS(build_knn_adjacency(coincident, 1),
                       doctest::Contains("'A' and 'B'"), DataError);

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.5, 0.5, 0.0;
  CHECK_THROWS_AS(graph_laplacian(bad), ArgumentError);

  Rng rng(3);
  const SensorGraph g = build_knn_adjacency(random_montage(4, rng), 2);
  CHECK_THROWS_AS(gft(Eigen::MatrixXd::Zero(3, 2), g), ArgumentError);
  CHECK_THROWS_AS(lowpass_smooth(Eigen::MatrixXd::Zero(4, 2), g, 0), ArgumentError);
  CHECK_THROWS_AS(lowpass_smooth(Eigen::MatrixXd::Zero(4, 2), g, 5), ArgumentError);
}

TEST_CASE("montage csv round trip and subset") {
  const Montage m = line_montage();
  const auto path = std::filesystem::temp_directory_path() / "stann_test_montage.csv";
  m.to_csv(path);
  const Montage back = Montage::from_csv(path);
  REQUIRE(back.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.sensor(i).label == m.sensor(i).label);
    CHECK(back.sensor(i).x == m.sensor(i).x);
    CHECK(back.sensor(i).y == m.sensor(i).y);
    CHECK(back.sensor(i).z == m.sensor(i).z);
  }

  const Montage sub = m.subset({"C", "A"});
  CHECK(sub.size() == 2);
  CHECK(sub.sensor(0).label == "C");
  CHECK(sub.sensor(1).label == "A");
  CHECK_THROWS_WITH_AS(m.subset({"A", "Q", "Z"}), doctest::Contains("Q"), DataError);

  std::filesystem::remove(path);
}

TEST_CASE("ring montage is evenly spaced on the unit sphere") {
  const Montage ring = ring_montage(8);
  REQUIRE(ring.size() == 8);
  for (int i = 0; i < 8; ++i) {
    const Sensor& s = ring.sensor(i);
    CHECK(std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z) == doctest::Approx(1.0));
  }
  // Adjacent spacing is uniform.
  const auto dist = [&ring](int i, int j) {
    const Sensor &a = ring.sensor(i), &b = ring.sensor(j);
    return std::hypot(a.x - b.x, std::hypot(a.y - b.y, a.z - b.z));
  };
  const double d01 = dist(0, 1);
  for (int i = 1; i < 8; ++i) CHECK(dist(i, (i + 1) % 8) == doctest::Approx(d01));
}
