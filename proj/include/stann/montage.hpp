#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stann {

struct Sensor {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Named electrode layout with 3-D coordinates in a shared head frame.
class Montage {
 public:
  Montage() = default;
  explicit Montage(std::vector<Sensor> sensors);

  // CSV with header "label,x,y,z"; one sensor per row.
  static Montage from_csv(const std::filesystem::path& path);
  void to_csv(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(sensors_.size()); }
  const std::vector<Sensor>& sensors() const { return sensors_; }
  const Sensor& sensor(int i) const { return sensors_.at(static_cast<std::size_t>(i)); }
  std::vector<std::string> labels() const;
  int index_of(const std::string& label) const;  // -1 when absent

  // n x 3 coordinate matrix in sensor order.
  Eigen::MatrixXd positions() const;

  // Reorders/subsets by label. Throws DataError naming every missing sensor.
  Montage subset(const std::vector<std::string>& labels) const;

 private:
  std::vector<Sensor> sensors_;
};

// Synthetic layout: n sensors evenly spaced on a circle of latitude on the
// unit sphere (labels SYN01, SYN02, ...).
Montage ring_montage(int n, double polar_deg = 60.0);

}  // namespace stann
