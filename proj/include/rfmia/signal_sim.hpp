#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rfmia/rng.hpp"

namespace rfmia {

enum class Modulation { BPSK, QPSK };
enum class DeviceRole { Authorized, Other, NonmemberGenerator };
enum class Observer { Provider, Adversary };
// Channel realization period. Training data for the target classifier is
// collected in the Train session; everything overheard later is Deploy.
enum class Session { Train, Deploy };

std::string_view to_string(Modulation m);
std::string_view to_string(DeviceRole r);
std::string_view to_string(Observer o);
Observer observer_from_string(std::string_view s);

struct DeviceProfile {
  int device_id = 0;
  double phase_shift = 0;     // radians, [0, 2pi)
  double transmit_power = 1;  // linear
  Modulation modulation = Modulation::QPSK;
  DeviceRole role = DeviceRole::Authorized;

  void validate() const;
};

struct ChannelLink {
  int tx_device_id = 0;
  Observer rx = Observer::Provider;
  Session session = Session::Train;
  double gain = 1;          // linear
  double phase_offset = 0;  // radians, [0, 2pi)

  void validate() const;
};

// Per-feature measurement error, uniform on [-bound, +bound].
struct NoiseSpec {
  double phase_bound = 0.1;
  double power_bound = 0.1;

  void validate() const;
};

// n received phases followed by n received powers, one pair per bit.
struct FeatureVector {
  Eigen::VectorXd phases;
  Eigen::VectorXd powers;

  Eigen::Index bits() const { return phases.size(); }
  Eigen::VectorXd flat() const;
  static FeatureVector from_flat(const Eigen::Ref<const Eigen::VectorXd>& flat);
};

// Wraps an angle into [0, 2pi).
double wrap_phase(double radians);

// Constellation phase per symbol (no device or channel rotation).
// QPSK Gray map: 00 -> pi/4, 01 -> 3pi/4, 11 -> 5pi/4, 10 -> 7pi/4.
// BPSK: 0 -> 0, 1 -> pi.
std::vector<double> modulate(std::span<const std::uint8_t> bits, Modulation modulation);

// One transmission of `bits` as seen through `link`. Every bit yields a
// (phase, power) pair, so a QPSK symbol is measured twice with fresh noise.
FeatureVector observe(const DeviceProfile& device, const ChannelLink& link, std::span<const std::uint8_t> bits,
                      const NoiseSpec& noise, Rng& rng);

// Mean received power for an SNR measured against the power noise bound.
double snr_to_received_power(double snr_db, const NoiseSpec& noise);

// `count` variants of `original` whose vector of per-feature relative changes
// (|change_k| / range_k) has Euclidean norm `total_level`. The direction is
// uniform on the unit sphere; phases are re-wrapped.
std::vector<FeatureVector> perturb_features(const FeatureVector& original, double total_level,
                                            const Eigen::Ref<const Eigen::VectorXd>& feature_ranges, int count,
                                            Rng& rng);

}  // namespace rfmia
