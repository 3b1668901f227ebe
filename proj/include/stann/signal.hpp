#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stann {

// Named passband in Hz.
struct BandSpec {
  std::string name;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

// theta 4-8, alpha 8-12, beta 12-29, gamma 30-45, wide 4-45.
const std::vector<BandSpec>& standard_bands();
BandSpec band_by_name(const std::string& name);

// One recorded trial: a pretrial reference segment followed by the trial
// proper, plus self-report ratings keyed by dimension name.
struct TrialRecording {
  std::string subject_id;
  std::string trial_id;
  double fs = 0.0;
  Eigen::MatrixXf pretrial;  // channels x pretrial samples
  Eigen::MatrixXf data;      // channels x trial samples
  std::map<std::string, double> ratings;
};

struct Dataset {
  int version = 1;
  double fs = 0.0;
  int scale_max = 9;  // rating scale upper bound (9 or 5)
  std::vector<std::string> sensor_labels;
  Eigen::MatrixXd sensor_positions;  // n x 3
  std::vector<TrialRecording> trials;
};

// One model input: a single window with its binary label and bookkeeping for
// grouped splits.
struct LabeledWindow {
  Eigen::MatrixXf x;  // channels x samples
  int label = 0;
  std::string subject_id;
  std::string trial_id;
};

// Second-order IIR section, normalized so a0 = 1.
struct Biquad {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Butterworth bandpass (analog prototype of the given order, bilinear
// transform with pre-warped edges) as a cascade of biquads.
std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs);

// Zero-phase filtering: odd-extension padding, steady-state section
// initialization, one forward and one backward pass.
Eigen::VectorXd filtfilt(const std::vector<Biquad>& sections, const Eigen::VectorXd& x);

// Zero-phase 4th-order Butterworth bandpass applied to every row of x.
// The band must satisfy 0 < lo < hi < fs/2.
Eigen::MatrixXd bandpass_filter(const Eigen::MatrixXd& x, const BandSpec& band, double fs);

// Subtracts each channel's pretrial mean from both the trial and the
// pretrial segment, so a second application is a no-op.
TrialRecording baseline_correct(const TrialRecording& trial);

// Consecutive non-overlapping windows of k samples; a trailing remainder is
// dropped. k > T yields an empty result and a warning on stderr.
std::vector<Eigen::MatrixXf> segment_trial(const Eigen::MatrixXf& data, int k);

// 1 when the rating is strictly above the threshold, else 0.
int binarize_rating(double rating, double threshold);

// Midpoint threshold for a rating scale: 5 on a 1-9 scale, 3 on a 1-5 scale.
double default_threshold(int scale_max);

}  // namespace stann
