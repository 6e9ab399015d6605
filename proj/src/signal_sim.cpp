#include "rfmia/signal_sim.hpp"

#include <cmath>
#include <numbers>

#include "rfmia/errors.hpp"

namespace rfmia {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * std::numbers::pi;

bool in_phase_range(double p) { return p >= 0 && p < kTwoPi; }
}  // namespace

std::string_view to_string(Modulation m) { return m == Modulation::BPSK ? "BPSK" : "QPSK"; }

std::string_view to_string(DeviceRole r) {
  switch (r) {
    case DeviceRole::Authorized: return "authorized";
    case DeviceRole::Other: return "other";
    case DeviceRole::NonmemberGenerator: return "nonmember-generator";
  }
  return "?";
}

std::string_view to_string(Observer o) { return o == Observer::Provider ? "provider" : "adversary"; }

Observer observer_from_string(std::string_view s) {
  if (s == "provider") return Observer::Provider;
  if (s == "adversary") return Observer::Adversary;
  throw InvalidInput("unknown observer '" + std::string(s) + "'");
}

void DeviceProfile::validate() const {
  if (!in_phase_range(phase_shift)) throw InvalidInput("device phase_shift outside [0, 2pi)");
  if (!(transmit_power > 0)) throw InvalidInput("device transmit_power must be > 0");
}

void ChannelLink::validate() const {
  if (!(gain > 0)) throw InvalidInput("link gain must be > 0");
  if (!in_phase_range(phase_offset)) throw InvalidInput("link phase_offset outside [0, 2pi)");
}

void NoiseSpec::validate() const {
  if (!(phase_bound >= 0) || !(power_bound >= 0)) throw InvalidInput("noise bounds must be >= 0");
}

Eigen::VectorXd FeatureVector::flat() const {
  Eigen::VectorXd out(phases.size() + powers.size());
  out << phases, powers;
  return out;
}

FeatureVector FeatureVector::from_flat(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() % 2 != 0) throw InvalidInput("flattened feature vector must have even length");
  const auto n = flat.size() / 2;
  return {flat.head(n), flat.tail(n)};
}

double wrap_phase(double radians) {
  double w = std::fmod(radians, kTwoPi);
  if (w < 0) w += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi
  if (w >= kTwoPi) w = 0;
  return w;
}

std::vector<double> modulate(std::span<const std::uint8_t> bits, Modulation modulation) {
  if (bits.empty()) throw InvalidInput("modulate: empty bit array");
  std::vector<double> symbols;
  if (modulation == Modulation::BPSK) {
    symbols.reserve(bits.size());
    for (auto b : bits) symbols.push_back(b ? kPi : 0.0);
    return symbols;
  }
  if (bits.size() % 2 != 0) throw InvalidInput("modulate: QPSK needs an even number of bits");
  symbols.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2) {
    const int pair = (bits[i] ? 2 : 0) | (bits[i + 1] ? 1 : 0);
    static constexpr double kGray[4] = {kPi / 4, 3 * kPi / 4, 7 * kPi / 4, 5 * kPi / 4};  // 00 01 10 11
    symbols.push_back(kGray[pair]);
  }
  return symbols;
}

FeatureVector observe(const DeviceProfile& device, const ChannelLink& link, std::span<const std::uint8_t> bits,
                      const NoiseSpec& noise, Rng& rng) {
  if (link.tx_device_id != device.device_id) throw InvalidInput("observe: link belongs to another device");
  const auto symbols = modulate(bits, device.modulation);
  const std::size_t per_symbol = device.modulation == Modulation::QPSK ? 2 : 1;
  const auto n = static_cast<Eigen::Index>(bits.size());
  FeatureVector fv{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const double rotation = device.phase_shift + link.phase_offset;
  const double power = link.gain * device.transmit_power;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double symbol = symbols[static_cast<std::size_t>(k) / per_symbol];
    fv.phases(k) = wrap_phase(symbol + rotation + rng.uniform(-noise.phase_bound, noise.phase_bound));
    fv.powers(k) = power + rng.uniform(-noise.power_bound, noise.power_bound);
  }
  return fv;
}

double snr_to_received_power(double snr_db, const NoiseSpec& noise) {
  if (!(noise.power_bound > 0)) throw InvalidInput("snr_to_received_power: power_bound must be > 0");
  return noise.power_bound * std::pow(10.0, snr_db / 10.0);
}

std::vector<FeatureVector> perturb_features(const FeatureVector& original, double total_level,
                                            const Eigen::Ref<const Eigen::VectorXd>& feature_ranges, int count,
                                            Rng& rng) {
  if (!(total_level > 0)) throw InvalidInput("perturb_features: total_level must be > 0");
  if (count < 0) throw InvalidInput("perturb_features: negative count");
  const Eigen::VectorXd flat = original.flat();
  if (feature_ranges.size() != flat.size()) throw InvalidInput("perturb_features: range count mismatch");
  for (Eigen::Index k = 0; k < feature_ranges.size(); ++k)
    if (!(feature_ranges(k) > 0)) throw DegenerateRange("perturb_features: feature " + std::to_string(k) + " has zero range");

  const auto n = original.bits();
  std::vector<FeatureVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int v = 0; v < count; ++v) {
    Eigen::VectorXd dir(flat.size());
    double norm = 0;
    while (!(norm > 1e-12)) {
      for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = rng.normal();
      norm = dir.norm();
    }
    const Eigen::VectorXd levels = dir * (total_level / norm);
    Eigen::VectorXd changed = flat + levels.cwiseProduct(feature_ranges);
    for (Eigen::Index k = 0; k < n; ++k) changed(k) = wrap_phase(changed(k));
    out.push_back(FeatureVector::from_flat(changed));
  }
  return out;
}

}  // namespace rfmia
