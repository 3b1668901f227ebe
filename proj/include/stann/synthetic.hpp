#pragma once

#include <cstdint>

#include "stann/signal.hpp"

namespace stann {

// Controls for the synthetic two-class corpus. Class "high" trials carry a
// band-limited tone whose amplitude falls off smoothly around a focus
// sensor; class "low" trials are pink noise only, so the class signal is
// spatially coherent and sits in a known frequency band.
struct SyntheticSpec {
  int n_channels = 8;
  double fs = 32.0;
  int n_trials = 40;           // split evenly between classes
  double trial_seconds = 8.0;
  double pretrial_seconds = 3.0;
  double tone_hz = 6.0;        // inside theta by default
  double class_effect = 2.0;   // tone amplitude at the focus sensor
  double noise_sd = 1.0;       // pink noise scale
  double focus_sigma = 0.9;    // angular spread of the tone across the ring
  int focus_sensor = 0;
  int scale_max = 9;
  double rating_offset = 2.0;  // ratings sit this far either side of midscale
  double baseline_drift = 0.5; // per-trial dc offset scale, removed by baselining
};

// Deterministic synthetic dataset on a ring montage. The same spec and seed
// always produce the same bytes.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace stann
