#include "stann/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>

#include "stann/errors.hpp"

namespace stann {

const std::vector<BandSpec>& standard_bands() {
  static const std::vector<BandSpec> bands = {
      {"theta", 4.0, 8.0},  {"alpha", 8.0, 12.0}, {"beta", 12.0, 29.0},
      {"gamma", 30.0, 45.0}, {"wide", 4.0, 45.0},
  };
  return bands;
}

BandSpec band_by_name(const std::string& name) {
  for (const auto& b : standard_bands()) {
    if (b.name == name) return b;
  }
  throw ArgumentError("unknown band '" + name +
                      "' (expected theta, alpha, beta, gamma or wide)");
}

std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz,
                                         double fs) {
  if (order < 1 || order % 2 != 0) {
    throw ArgumentError("butterworth: prototype order must be a positive even number");
  }
  if (!(fs > 0.0) || !(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < fs / 2.0)) {
    throw ArgumentError("butterworth: band edges must satisfy 0 < lo < hi < fs/2");
  }

  using cd = std::complex<double>;
  const double pi = 3.14159265358979323846;
  const double k_bilinear = 2.0 * fs;
  // Pre-warped analog edge frequencies.
  const double w_lo = k_bilinear * std::tan(pi * lo_hz / fs);
  const double w_hi = k_bilinear * std::tan(pi * hi_hz / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  // Upper half-plane prototype poles; conjugates are implicit.
  std::vector<cd> digital_poles;
  for (int k = 1; k <= order / 2; ++k) {
    const double angle = pi * (2.0 * k + order - 1.0) / (2.0 * order);
    const cd proto(std::cos(angle), std::sin(angle));
    // Lowpass-to-bandpass: s^2 - bw*p*s + w0^2 = 0.
    const cd bp = bw * proto;
    const cd root = std::sqrt(bp * bp - 4.0 * w0_sq);
    for (const cd s : {(bp + root) / 2.0, (bp - root) / 2.0}) {
      digital_poles.push_back((k_bilinear + s) / (k_bilinear - s));
    }
  }
  // Sections nearest DC take the zeros at z=+1, the rest take z=-1, so each
  // pole pair is matched with its closest zeros.
  std::sort(digital_poles.begin(), digital_poles.end(), [](const cd& a, const cd& b) {
    return std::abs(std::arg(a)) < std::abs(std::arg(b));
  });

  std::vector<Biquad> sections;
  const int n_sections = static_cast<int>(digital_poles.size());
  for (int i = 0; i < n_sections; ++i) {
    const cd p = digital_poles[static_cast<std::size_t>(i)];
    Biquad s;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    s.b0 = 1.0;
    s.b1 = (i < n_sections / 2) ? -2.0 : 2.0;
    s.b2 = 1.0;
    sections.push_back(s);
  }

  // Normalize to unit gain at the warped center frequency, split evenly
  // across sections.
  const double w_center = 2.0 * std::atan(std::sqrt(w0_sq) / k_bilinear);
  const cd z(std::cos(w_center), std::sin(w_center));
  cd h(1.0, 0.0);
  for (const auto& s : sections) {
    h *= (s.b0 * z * z + s.b1 * z + cd(s.b2)) / (z * z + s.a1 * z + cd(s.a2));
  }
  const double g = std::pow(1.0 / std::abs(h), 1.0 / n_sections);
  for (auto& s : sections) {
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return sections;
}

namespace {

// Steady-state internal state of a transposed direct-form II biquad for a
// constant input of 1, so filtering a constant yields its steady response
// from the first sample.
void biquad_zi(const Biquad& s, double& z1, double& z2) {
  const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  z1 = dc - s.b0;
  z2 = s.b2 - s.a2 * dc;
}

void biquad_filter_inplace(const Biquad& s, Eigen::VectorXd& x) {
  double z1, z2;
  biquad_zi(s, z1, z2);
  z1 *= x(0);
  z2 *= x(0);
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double in = x(n);
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    x(n) = out;
  }
}

}  // namespace

Eigen::VectorXd filtfilt(const std::vector<Biquad>& sections, const Eigen::VectorXd& x) {
  const Eigen::Index t = x.size();
  if (t < 4) throw ArgumentError("filtfilt: input too short");
  const Eigen::Index padlen =
      std::min<Eigen::Index>(3 * (2 * static_cast<Eigen::Index>(sections.size()) + 1), t - 1);

  Eigen::VectorXd ext(t + 2 * padlen);
  for (Eigen::Index i = 0; i < padlen; ++i) {
    ext(i) = 2.0 * x(0) - x(padlen - i);
    ext(padlen + t + i) = 2.0 * x(t - 1) - x(t - 2 - i);
  }
  ext.segment(padlen, t) = x;

  for (const auto& s : sections) biquad_filter_inplace(s, ext);
  ext.reverseInPlace();
  for (const auto& s : sections) biquad_filter_inplace(s, ext);
  ext.reverseInPlace();
  return ext.segment(padlen, t);
}

Eigen::MatrixXd bandpass_filter(const Eigen::MatrixXd& x, const BandSpec& band, double fs) {
  if (!(fs > 0.0)) throw ArgumentError("bandpass: sampling rate must be positive");
  if (!(band.lo_hz > 0.0) || !(band.lo_hz < band.hi_hz) || !(band.hi_hz < fs / 2.0)) {
    throw ArgumentError("bandpass: band '" + band.name + "' (" +
                        std::to_string(band.lo_hz) + "-" + std::to_string(band.hi_hz) +
                        " Hz) invalid for fs " + std::to_string(fs));
  }
  const auto sections = butterworth_bandpass(4, band.lo_hz, band.hi_hz, fs);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = filtfilt(sections, x.row(r).transpose()).transpose();
  }
  return out;
}

TrialRecording baseline_correct(const TrialRecording& trial) {
  if (trial.pretrial.cols() == 0) {
    throw DataError("baseline: trial '" + trial.trial_id + "' has no pretrial segment");
  }
  if (trial.pretrial.rows() != trial.data.rows()) {
    throw DataError("baseline: trial '" + trial.trial_id +
                    "' pretrial/data channel mismatch");
  }
  TrialRecording out = trial;
  for (Eigen::Index ch = 0; ch < trial.data.rows(); ++ch) {
    const double mean = trial.pretrial.row(ch).cast<double>().mean();
    out.pretrial.row(ch) = trial.pretrial.row(ch).array() - static_cast<float>(mean);
    out.data.row(ch) = trial.data.row(ch).array() - static_cast<float>(mean);
  }
  return out;
}

std::vector<Eigen::MatrixXf> segment_trial(const Eigen::MatrixXf& data, int k) {
  if (k < 1) throw ArgumentError("segment: window length must be positive");
  std::vector<Eigen::MatrixXf> windows;
  if (k > data.cols()) {
    std::cerr << "warning: window of " << k << " samples exceeds trial length "
              << data.cols() << "; no windows produced" << std::endl;
    return windows;
  }
  const Eigen::Index count = data.cols() / k;
  windows.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index w = 0; w < count; ++w) {
    windows.push_back(data.middleCols(w * k, k));
  }
  return windows;
}

int binarize_rating(double rating, double threshold) {
  if (!std::isfinite(rating) || !std::isfinite(threshold)) {
    throw DataError("binarize: non-finite rating or threshold");
  }
  return rating > threshold ? 1 : 0;
}

double default_threshold(int scale_max) {
  if (scale_max < 2) throw ArgumentError("threshold: rating scale must reach at least 2");
  return (scale_max + 1) / 2.0;
}

}  // namespace stann
