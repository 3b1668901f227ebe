#include "stann/montage.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "stann/errors.hpp"

namespace stann {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  return fields;
}

double parse_coord(const std::string& field, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError("montage: bad coordinate '" + field + "' in " + context);
  }
}

}  // namespace

Montage::Montage(std::vector<Sensor> sensors) : sensors_(std::move(sensors)) {
  if (sensors_.size() < 2) {
    throw DataError("montage: need at least 2 sensors, got " +
                    std::to_string(sensors_.size()));
  }
  std::set<std::string> seen;
  for (const auto& s : sensors_) {
    if (s.label.empty()) throw DataError("montage: empty sensor label");
    if (!seen.insert(s.label).second) {
      throw DataError("montage: duplicate sensor label '" + s.label + "'");
    }
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
      throw DataError("montage: non-finite coordinates for sensor '" + s.label + "'");
    }
  }
}

Montage Montage::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("montage: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("montage: empty file " + path.string());
  const auto header = split_csv_row(line);
  if (header != std::vector<std::string>{"label", "x", "y", "z"}) {
    throw DataError("montage: expected header 'label,x,y,z' in " + path.string());
  }
  std::vector<Sensor> sensors;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != 4) {
      throw DataError("montage: expected 4 fields on line " + std::to_string(row) +
                      " of " + path.string());
    }
    const std::string context = path.string() + ":" + std::to_string(row);
    sensors.push_back({fields[0], parse_coord(fields[1], context),
                       parse_coord(fields[2], context), parse_coord(fields[3], context)});
  }
  return Montage(std::move(sensors));
}

void Montage::to_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("montage: cannot write " + path.string());
  out << "label,x,y,z\n";
  out << std::setprecision(17);
  for (const auto& s : sensors_) {
    out << s.label << "," << s.x << "," << s.y << "," << s.z << "\n";
  }
}

std::vector<std::string> Montage::labels() const {
  std::vector<std::string> out;
  out.reserve(sensors_.size());
  for (const auto& s : sensors_) out.push_back(s.label);
  return out;
}

int Montage::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if (sensors_[i].label == label) return static_cast<int>(i);
  }
  return -1;
}

Eigen::MatrixXd Montage::positions() const {
  Eigen::MatrixXd pos(size(), 3);
  for (int i = 0; i < size(); ++i) {
    pos(i, 0) = sensors_[static_cast<std::size_t>(i)].x;
    pos(i, 1) = sensors_[static_cast<std::size_t>(i)].y;
    pos(i, 2) = sensors_[static_cast<std::size_t>(i)].z;
  }
  return pos;
}

Montage Montage::subset(const std::vector<std::string>& labels) const {
  std::vector<Sensor> picked;
  std::string missing;
  for (const auto& label : labels) {
    const int idx = index_of(label);
    if (idx < 0) {
      if (!missing.empty()) missing += ", ";
      missing += label;
    } else {
      picked.push_back(sensors_[static_cast<std::size_t>(idx)]);
    }
  }
  if (!missing.empty()) {
    throw DataError("montage: missing sensors: " + missing);
  }
  return Montage(std::move(picked));
}

Montage ring_montage(int n, double polar_deg) {
  if (n < 2) throw DataError("ring montage: need at least 2 sensors");
  const double pi = 3.14159265358979323846;
  const double theta = polar_deg * pi / 180.0;
  std::vector<Sensor> sensors;
  sensors.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * pi * i / n;
    std::ostringstream label;
    label << "SYN" << std::setfill('0') << std::setw(2) << (i + 1);
    sensors.push_back({label.str(), std::sin(theta) * std::cos(phi),
                       std::sin(theta) * std::sin(phi), std::cos(theta)});
  }
  return Montage(std::move(sensors));
}

}  // namespace stann
