#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfmia/signal_sim.hpp"

namespace rfmia {

enum class Membership { Member, Nonmember, Unused };
std::string_view to_string(Membership m);
Membership membership_from_string(std::string_view s);

enum class ScenarioKind { Setting1, Setting2 };
std::string_view to_string(ScenarioKind k);

// Everything needed to regenerate a dataset. Presets: "setting1-strong",
// "setting1-weak", "setting2". Setting 1 is binary (authorized vs not) with
// non-members drawn from the same devices; setting 2 is a 20-device
// classifier with non-members from one extra device.
struct ScenarioConfig {
  std::string name = "setting1-strong";
  ScenarioKind kind = ScenarioKind::Setting1;
  std::uint64_t seed = 1;
  int bits_per_sample = 16;
  NoiseSpec noise;
  // Per-link gain factor u ~ U[1 - spread, 1 + spread], drawn once.
  double gain_spread = 0.1;
  // Each session re-draws link gains as g * U[1 - jitter, 1 + jitter].
  double session_gain_jitter = 0.0;
  // Outside the training session every transmission sees its own gain
  // realization g * U[1 - v, 1 + v].
  double deploy_gain_variation = 0.4;
  // ... and a common channel phase offset U[-w, w] radians.
  double deploy_phase_variation = 0.0;

  // setting 1
  int authorized_devices = 3;
  int other_bpsk_devices = 3;
  int other_qpsk_devices = 3;
  double authorized_snr_db = 10;
  double other_snr_db = 3;
  int target_train = 8000;
  int target_test = 10000;
  int surrogate_train = 1000;
  int surrogate_test = 1000;
  int mia_members = 1000;     // per MIA split (train and test)
  int mia_nonmembers = 1000;  // per MIA split (train and test)
  // Draw MIA members from class-1 training samples only.
  bool mia_members_authorized_only = true;

  // setting 2
  int qpsk_classes = 10;
  int bpsk_classes = 10;
  double min_snr_db = 3;
  double max_snr_db = 10;
  double nonmember_snr_db = 13;  // above every class: a device closer to the receiver
  int set_size = 2000;
  int subset_size = 1000;

  static ScenarioConfig preset(std::string_view name);
  int num_classes() const;
  void validate() const;

  nlohmann::json to_json() const;
  // Starts from the preset named in j["name"] (or j["base"]) and applies
  // every other key as an override.
  static ScenarioConfig from_json(const nlohmann::json& j);
};

struct PairedObservation {
  std::int64_t id = 0;
  std::vector<std::uint8_t> bits;  // empty when loaded from CSV
  FeatureVector provider;
  FeatureVector adversary;
  int class_label = 0;  // -1 for devices outside the classifier's label space
  Membership membership = Membership::Unused;
  int device_id = 0;

  const FeatureVector& features(Observer o) const { return o == Observer::Provider ? provider : adversary; }
};

struct Split {
  std::string name;
  std::vector<PairedObservation> observations;
};

// Immutable result of synth_scenario.
struct Dataset {
  ScenarioConfig config;
  std::vector<DeviceProfile> devices;
  std::vector<ChannelLink> links;
  std::map<int, double> snr_db;  // device id -> configured SNR
  std::vector<Split> splits;

  const Split& split(std::string_view name) const;
  bool has_split(std::string_view name) const;
};

// Split names.
namespace splits {
inline constexpr std::string_view kTargetTrain = "target_train";
inline constexpr std::string_view kTargetTest = "target_test";
inline constexpr std::string_view kSurrogateTrain = "surrogate_train";
inline constexpr std::string_view kSurrogateTest = "surrogate_test";
inline constexpr std::string_view kMiaMemberTrain = "mia_member_train";
inline constexpr std::string_view kMiaMemberTest = "mia_member_test";
inline constexpr std::string_view kMiaNonmemberTrain = "mia_nonmember_train";
inline constexpr std::string_view kMiaNonmemberTest = "mia_nonmember_test";
// setting 2
inline constexpr std::string_view kA = "A";
inline constexpr std::string_view kB = "B";
inline constexpr std::string_view kCnm = "C_nm";
inline constexpr std::string_view kDnm = "D_nm";
inline constexpr std::string_view kA1 = "A1";
inline constexpr std::string_view kD1 = "D1";
}  // namespace splits

Dataset synth_scenario(const ScenarioConfig& config);

// Observations of `all` whose ids do not occur in `subset`.
std::vector<PairedObservation> difference(const std::vector<PairedObservation>& all,
                                          const std::vector<PairedObservation>& subset);

// CSV: one row per observation per observer.
std::string split_to_csv(const Split& split);
Split split_from_csv(std::string name, std::string_view csv);

// Directory layout: scenario.json plus <split>.csv per split.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace rfmia
