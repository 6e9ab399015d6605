#include "rfmia/scenario.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "rfmia/errors.hpp"
#include "rfmia/io.hpp"

namespace rfmia {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// Devices and links of a scenario, indexed for generation.
struct World {
  std::vector<DeviceProfile> devices;
  std::vector<ChannelLink> links;
  std::map<int, double> snr_db;

  const DeviceProfile& device(int id) const { return devices.at(static_cast<std::size_t>(id)); }
  const ChannelLink& link(int id, Observer rx, Session s) const {
    for (const auto& l : links)
      if (l.tx_device_id == id && l.rx == rx && l.session == s) return l;
    throw InvalidInput("no link for device " + std::to_string(id));
  }
};

void add_device(World& w, const ScenarioConfig& cfg, Modulation mod, DeviceRole role, double snr_db, Rng& rng) {
  DeviceProfile d;
  d.device_id = static_cast<int>(w.devices.size());
  d.phase_shift = rng.uniform(0, kTwoPi);
  d.transmit_power = 1.0;
  d.modulation = mod;
  d.role = role;
  const double rx_power = snr_to_received_power(snr_db, cfg.noise);
  for (Observer rx : {Observer::Provider, Observer::Adversary}) {
    const double base_gain = rx_power * rng.uniform(1 - cfg.gain_spread, 1 + cfg.gain_spread);
    const double phase = rng.uniform(0, kTwoPi);
    for (Session s : {Session::Train, Session::Deploy}) {
      const double jitter = rng.uniform(1 - cfg.session_gain_jitter, 1 + cfg.session_gain_jitter);
      w.links.push_back({d.device_id, rx, s, base_gain * jitter, phase});
    }
  }
  w.snr_db[d.device_id] = snr_db;
  w.devices.push_back(d);
}

// The setting-2 extra device transmits both modulations from one radio at one
// location: two profiles sharing hardware phase and links.
void add_twin(World& w, const DeviceProfile& base) {
  DeviceProfile twin = base;
  twin.device_id = static_cast<int>(w.devices.size());
  twin.modulation = base.modulation == Modulation::QPSK ? Modulation::BPSK : Modulation::QPSK;
  for (std::size_t i = 0, n = w.links.size(); i < n; ++i) {
    if (w.links[i].tx_device_id != base.device_id) continue;
    ChannelLink l = w.links[i];
    l.tx_device_id = twin.device_id;
    w.links.push_back(l);
  }
  w.snr_db[twin.device_id] = w.snr_db.at(base.device_id);
  w.devices.push_back(twin);
}

class Generator {
 public:
  Generator(const ScenarioConfig& cfg, const World& world) : cfg_(cfg), world_(world) {}

  PairedObservation draw(int device_id, int class_label, Membership membership, Session session, Rng& rng) {
    PairedObservation o;
    o.id = next_id_++;
    o.bits.resize(static_cast<std::size_t>(cfg_.bits_per_sample));
    for (auto& b : o.bits) b = rng.bit() ? 1 : 0;
    const auto& dev = world_.device(device_id);
    o.provider = observe(dev, realize(world_.link(device_id, Observer::Provider, session), rng), o.bits, cfg_.noise, rng);
    o.adversary = observe(dev, realize(world_.link(device_id, Observer::Adversary, session), rng), o.bits, cfg_.noise, rng);
    o.class_label = class_label;
    o.membership = membership;
    o.device_id = device_id;
    return o;
  }

  // `count` observations drawn uniformly from `device_ids`.
  std::vector<PairedObservation> draw_from(const std::vector<int>& device_ids, const std::vector<int>& labels,
                                           int count, Membership membership, Session session, Rng& rng) {
    std::vector<PairedObservation> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const auto k = rng.below(device_ids.size());
      out.push_back(draw(device_ids[k], labels[k], membership, session, rng));
    }
    return out;
  }

 private:
  // Per-transmission channel realization; the training session is static.
  ChannelLink realize(ChannelLink link, Rng& rng) const {
    if (link.session == Session::Deploy && cfg_.deploy_gain_variation > 0)
      link.gain *= rng.uniform(1 - cfg_.deploy_gain_variation, 1 + cfg_.deploy_gain_variation);
    if (link.session == Session::Deploy && cfg_.deploy_phase_variation > 0)
      link.phase_offset = wrap_phase(link.phase_offset + rng.uniform(-cfg_.deploy_phase_variation, cfg_.deploy_phase_variation));
    return link;
  }

  const ScenarioConfig& cfg_;
  const World& world_;
  std::int64_t next_id_ = 0;
};

std::vector<PairedObservation> concat(std::vector<PairedObservation> a, std::vector<PairedObservation> b, Rng& rng) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  shuffle(a, rng);
  return a;
}

// Random disjoint subsets of `pool` with the given sizes.
std::vector<std::vector<PairedObservation>> sample_disjoint(const std::vector<PairedObservation>& pool,
                                                            std::vector<int> sizes, Rng& rng) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  shuffle(idx, rng);
  std::vector<std::vector<PairedObservation>> out;
  std::size_t pos = 0;
  for (int s : sizes) {
    std::vector<std::size_t> chosen(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                                    idx.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(s)));
    std::sort(chosen.begin(), chosen.end());
    auto& part = out.emplace_back();
    for (auto i : chosen) part.push_back(pool[i]);
    pos += static_cast<std::size_t>(s);
  }
  return out;
}

Dataset synth_setting1(const ScenarioConfig& cfg) {
  World w;
  Rng dev_rng(cfg.seed, "scenario/devices");
  std::vector<int> auth, other_bpsk, other_qpsk;
  for (int i = 0; i < cfg.authorized_devices; ++i) {
    add_device(w, cfg, Modulation::QPSK, DeviceRole::Authorized, cfg.authorized_snr_db, dev_rng);
    auth.push_back(w.devices.back().device_id);
  }
  for (int i = 0; i < cfg.other_bpsk_devices; ++i) {
    add_device(w, cfg, Modulation::BPSK, DeviceRole::Other, cfg.other_snr_db, dev_rng);
    other_bpsk.push_back(w.devices.back().device_id);
  }
  for (int i = 0; i < cfg.other_qpsk_devices; ++i) {
    add_device(w, cfg, Modulation::QPSK, DeviceRole::Other, cfg.other_snr_db, dev_rng);
    other_qpsk.push_back(w.devices.back().device_id);
  }
  const std::vector<int> ones(auth.size(), 1), zeros_b(other_bpsk.size(), 0), zeros_q(other_qpsk.size(), 0);

  Generator gen(cfg, w);
  auto balanced = [&](std::string_view label, int count, Membership m, Session s) {
    Rng rng(cfg.seed, std::string("scenario/split/") + std::string(label));
    auto pos = gen.draw_from(auth, ones, count / 2, m, s, rng);
    auto neg = gen.draw_from(other_bpsk, zeros_b, count - count / 2, m, s, rng);
    return concat(std::move(pos), std::move(neg), rng);
  };

  Dataset ds;
  ds.config = cfg;
  auto train = balanced(splits::kTargetTrain, cfg.target_train, Membership::Member, Session::Train);
  auto test = balanced(splits::kTargetTest, cfg.target_test, Membership::Unused, Session::Deploy);
  auto sur_train = balanced(splits::kSurrogateTrain, cfg.surrogate_train, Membership::Unused, Session::Deploy);
  auto sur_test = balanced(splits::kSurrogateTest, cfg.surrogate_test, Membership::Unused, Session::Deploy);

  Rng member_rng(cfg.seed, "scenario/split/mia_members");
  std::vector<PairedObservation> member_pool;
  for (const auto& o : train)
    if (!cfg.mia_members_authorized_only || o.class_label == 1) member_pool.push_back(o);
  if (static_cast<int>(member_pool.size()) < 2 * cfg.mia_members) throw ConfigError("not enough training samples for the MIA member subsets");
  auto members = sample_disjoint(member_pool, {cfg.mia_members, cfg.mia_members}, member_rng);

  auto nonmembers = [&](std::string_view label) {
    Rng rng(cfg.seed, std::string("scenario/split/") + std::string(label));
    auto pos = gen.draw_from(auth, ones, cfg.mia_nonmembers / 2, Membership::Nonmember, Session::Deploy, rng);
    auto neg = gen.draw_from(other_qpsk, zeros_q, cfg.mia_nonmembers - cfg.mia_nonmembers / 2,
                             Membership::Nonmember, Session::Deploy, rng);
    return concat(std::move(pos), std::move(neg), rng);
  };
  auto nm_train = nonmembers(splits::kMiaNonmemberTrain);
  auto nm_test = nonmembers(splits::kMiaNonmemberTest);

  ds.splits.push_back({std::string(splits::kTargetTrain), std::move(train)});
  ds.splits.push_back({std::string(splits::kTargetTest), std::move(test)});
  ds.splits.push_back({std::string(splits::kSurrogateTrain), std::move(sur_train)});
  ds.splits.push_back({std::string(splits::kSurrogateTest), std::move(sur_test)});
  ds.splits.push_back({std::string(splits::kMiaMemberTrain), std::move(members[0])});
  ds.splits.push_back({std::string(splits::kMiaMemberTest), std::move(members[1])});
  ds.splits.push_back({std::string(splits::kMiaNonmemberTrain), std::move(nm_train)});
  ds.splits.push_back({std::string(splits::kMiaNonmemberTest), std::move(nm_test)});
  ds.devices = std::move(w.devices);
  ds.links = std::move(w.links);
  ds.snr_db = std::move(w.snr_db);
  return ds;
}

Dataset synth_setting2(const ScenarioConfig& cfg) {
  World w;
  Rng dev_rng(cfg.seed, "scenario/devices");
  auto spaced = [&](int i, int n) {
    return n == 1 ? cfg.max_snr_db : cfg.min_snr_db + (cfg.max_snr_db - cfg.min_snr_db) * i / (n - 1);
  };
  std::vector<int> classes, labels;
  for (int i = 0; i < cfg.qpsk_classes; ++i)
    add_device(w, cfg, Modulation::QPSK, DeviceRole::Authorized, spaced(i, cfg.qpsk_classes), dev_rng);
  for (int i = 0; i < cfg.bpsk_classes; ++i)
    add_device(w, cfg, Modulation::BPSK, DeviceRole::Other, spaced(i, cfg.bpsk_classes), dev_rng);
  for (const auto& d : w.devices) {
    classes.push_back(d.device_id);
    labels.push_back(d.device_id);
  }
  add_device(w, cfg, Modulation::QPSK, DeviceRole::NonmemberGenerator, cfg.nonmember_snr_db, dev_rng);
  const int extra_qpsk = w.devices.back().device_id;
  add_twin(w, w.devices.back());
  const int extra_bpsk = w.devices.back().device_id;

  Generator gen(cfg, w);
  auto per_class = [&](std::string_view label, Membership m, Session s) {
    Rng rng(cfg.seed, std::string("scenario/split/") + std::string(label));
    std::vector<PairedObservation> out;
    const int k = static_cast<int>(classes.size());
    for (int i = 0; i < cfg.set_size; ++i) out.push_back(gen.draw(classes[static_cast<std::size_t>(i % k)], i % k, m, s, rng));
    shuffle(out, rng);
    return out;
  };
  auto extra = [&](std::string_view label) {
    Rng rng(cfg.seed, std::string("scenario/split/") + std::string(label));
    std::vector<PairedObservation> out;
    for (int i = 0; i < cfg.set_size; ++i)
      out.push_back(gen.draw(i % 2 == 0 ? extra_qpsk : extra_bpsk, -1, Membership::Nonmember, Session::Deploy, rng));
    shuffle(out, rng);
    return out;
  };

  Dataset ds;
  ds.config = cfg;
  auto a = per_class(splits::kA, Membership::Member, Session::Train);
  auto b = per_class(splits::kB, Membership::Unused, Session::Deploy);
  auto c = extra(splits::kCnm);
  auto d = extra(splits::kDnm);
  Rng sub_rng(cfg.seed, "scenario/split/subsets");
  auto a1 = std::move(sample_disjoint(a, {cfg.subset_size}, sub_rng)[0]);
  auto d1 = std::move(sample_disjoint(d, {cfg.subset_size}, sub_rng)[0]);

  ds.splits.push_back({std::string(splits::kA), std::move(a)});
  ds.splits.push_back({std::string(splits::kB), std::move(b)});
  ds.splits.push_back({std::string(splits::kCnm), std::move(c)});
  ds.splits.push_back({std::string(splits::kDnm), std::move(d)});
  ds.splits.push_back({std::string(splits::kA1), std::move(a1)});
  ds.splits.push_back({std::string(splits::kD1), std::move(d1)});
  ds.devices = std::move(w.devices);
  ds.links = std::move(w.links);
  ds.snr_db = std::move(w.snr_db);
  return ds;
}

}  // namespace

std::string_view to_string(ScenarioKind k) { return k == ScenarioKind::Setting1 ? "setting1" : "setting2"; }

std::string_view to_string(Membership m) {
  switch (m) {
    case Membership::Member: return "member";
    case Membership::Nonmember: return "nonmember";
    case Membership::Unused: return "unused";
  }
  return "?";
}

Membership membership_from_string(std::string_view s) {
  if (s == "member") return Membership::Member;
  if (s == "nonmember") return Membership::Nonmember;
  if (s == "unused") return Membership::Unused;
  throw InvalidInput("unknown membership '" + std::string(s) + "'");
}

ScenarioConfig ScenarioConfig::preset(std::string_view name) {
  ScenarioConfig c;
  c.name = std::string(name);
  if (name == "setting1-strong") {
    c.kind = ScenarioKind::Setting1;
  } else if (name == "setting1-weak") {
    c.kind = ScenarioKind::Setting1;
    c.authorized_snr_db = 3;
    c.other_snr_db = 10;
  } else if (name == "setting2") {
    c.kind = ScenarioKind::Setting2;
    c.deploy_gain_variation = 0;
  } else {
    throw ConfigError("unknown scenario preset '" + std::string(name) + "'");
  }
  return c;
}

int ScenarioConfig::num_classes() const {
  return kind == ScenarioKind::Setting1 ? 2 : qpsk_classes + bpsk_classes;
}

void ScenarioConfig::validate() const {
  noise.validate();
  if (bits_per_sample < 2 || bits_per_sample % 2 != 0) throw ConfigError("bits_per_sample must be even and >= 2");
  if (!(noise.power_bound > 0)) throw ConfigError("noise.power_bound must be > 0");
  if (gain_spread < 0 || gain_spread >= 1) throw ConfigError("gain_spread must lie in [0, 1)");
  if (session_gain_jitter < 0 || session_gain_jitter >= 1) throw ConfigError("session_gain_jitter must lie in [0, 1)");
  if (deploy_gain_variation < 0 || deploy_gain_variation >= 1)
    throw ConfigError("deploy_gain_variation must lie in [0, 1)");
  if (kind == ScenarioKind::Setting1) {
    if (authorized_devices < 1 || other_bpsk_devices < 1 || other_qpsk_devices < 1)
      throw ConfigError("setting 1 needs at least one device of each kind");
    if (target_train < 2 || target_test < 2 || surrogate_train < 2 || surrogate_test < 2)
      throw ConfigError("setting 1 split sizes must be >= 2");
    if (mia_members < 1 || mia_nonmembers < 2) throw ConfigError("MIA pools must be nonempty");
    if (2 * mia_members > target_train) throw ConfigError("MIA member subsets exceed the training set");
  } else {
    if (qpsk_classes < 1 || bpsk_classes < 0) throw ConfigError("setting 2 class counts must be positive");
    if (set_size < num_classes()) throw ConfigError("set_size is smaller than the number of classes");
    if (subset_size < 1 || subset_size >= set_size) throw ConfigError("subset_size must lie in [1, set_size)");
  }
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j = {{"name", name},
                      {"kind", std::string(rfmia::to_string(kind))},
                      {"seed", seed},
                      {"bits_per_sample", bits_per_sample},
                      {"phase_noise_bound", noise.phase_bound},
                      {"power_noise_bound", noise.power_bound},
                      {"gain_spread", gain_spread},
                      {"session_gain_jitter", session_gain_jitter},
                      {"deploy_gain_variation", deploy_gain_variation},
                      {"deploy_phase_variation", deploy_phase_variation}};
  if (kind == ScenarioKind::Setting1) {
    j.update({{"authorized_devices", authorized_devices},
              {"other_bpsk_devices", other_bpsk_devices},
              {"other_qpsk_devices", other_qpsk_devices},
              {"authorized_snr_db", authorized_snr_db},
              {"other_snr_db", other_snr_db},
              {"target_train", target_train},
              {"target_test", target_test},
              {"surrogate_train", surrogate_train},
              {"surrogate_test", surrogate_test},
              {"mia_members", mia_members},
              {"mia_nonmembers", mia_nonmembers},
              {"mia_members_authorized_only", mia_members_authorized_only}});
  } else {
    j.update({{"qpsk_classes", qpsk_classes},
              {"bpsk_classes", bpsk_classes},
              {"min_snr_db", min_snr_db},
              {"max_snr_db", max_snr_db},
              {"nonmember_snr_db", nonmember_snr_db},
              {"set_size", set_size},
              {"subset_size", subset_size}});
  }
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  const std::string base = j.contains("base") ? j.at("base").get<std::string>() : j.value("name", "setting1-strong");
  ScenarioConfig c = preset(base);
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  for (const auto& [key, value] : j.items()) {
    if (key == "name" || key == "base") continue;
    if (key == "kind") {
      const auto k = value.get<std::string>();
      if (k != rfmia::to_string(c.kind)) throw ConfigError("kind '" + k + "' does not match base scenario " + base);
    } else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "bits_per_sample") c.bits_per_sample = value.get<int>();
    else if (key == "phase_noise_bound") c.noise.phase_bound = value.get<double>();
    else if (key == "power_noise_bound") c.noise.power_bound = value.get<double>();
    else if (key == "gain_spread") c.gain_spread = value.get<double>();
    else if (key == "session_gain_jitter") c.session_gain_jitter = value.get<double>();
    else if (key == "deploy_gain_variation") c.deploy_gain_variation = value.get<double>();
    else if (key == "deploy_phase_variation") c.deploy_phase_variation = value.get<double>();
    else if (key == "mia_members_authorized_only") c.mia_members_authorized_only = value.get<bool>();
    else if (key == "authorized_devices") c.authorized_devices = value.get<int>();
    else if (key == "other_bpsk_devices") c.other_bpsk_devices = value.get<int>();
    else if (key == "other_qpsk_devices") c.other_qpsk_devices = value.get<int>();
    else if (key == "authorized_snr_db") c.authorized_snr_db = value.get<double>();
    else if (key == "other_snr_db") c.other_snr_db = value.get<double>();
    else if (key == "target_train") c.target_train = value.get<int>();
    else if (key == "target_test") c.target_test = value.get<int>();
    else if (key == "surrogate_train") c.surrogate_train = value.get<int>();
    else if (key == "surrogate_test") c.surrogate_test = value.get<int>();
    else if (key == "mia_members") c.mia_members = value.get<int>();
    else if (key == "mia_nonmembers") c.mia_nonmembers = value.get<int>();
    else if (key == "qpsk_classes") c.qpsk_classes = value.get<int>();
    else if (key == "bpsk_classes") c.bpsk_classes = value.get<int>();
    else if (key == "min_snr_db") c.min_snr_db = value.get<double>();
    else if (key == "max_snr_db") c.max_snr_db = value.get<double>();
    else if (key == "nonmember_snr_db") c.nonmember_snr_db = value.get<double>();
    else if (key == "set_size") c.set_size = value.get<int>();
    else if (key == "subset_size") c.subset_size = value.get<int>();
    else throw ConfigError("unknown scenario key '" + key + "'");
  }
  return c;
}

const Split& Dataset::split(std::string_view name) const {
  for (const auto& s : splits)
    if (s.name == name) return s;
  throw MissingArtifact("dataset has no split '" + std::string(name) + "'");
}

bool Dataset::has_split(std::string_view name) const {
  return std::any_of(splits.begin(), splits.end(), [&](const Split& s) { return s.name == name; });
}

Dataset synth_scenario(const ScenarioConfig& config) {
  config.validate();
  return config.kind == ScenarioKind::Setting1 ? synth_setting1(config) : synth_setting2(config);
}

std::vector<PairedObservation> difference(const std::vector<PairedObservation>& all,
                                          const std::vector<PairedObservation>& subset) {
  std::unordered_set<std::int64_t> drop;
  for (const auto& o : subset) drop.insert(o.id);
  std::vector<PairedObservation> out;
  for (const auto& o : all)
    if (!drop.contains(o.id)) out.push_back(o);
  return out;
}

std::string split_to_csv(const Split& split) {
  std::string out = "observation_id,observer";
  const auto n = split.observations.empty() ? Eigen::Index{0} : split.observations.front().provider.flat().size();
  for (Eigen::Index k = 0; k < n; ++k) out += ",feature_" + std::to_string(k);
  out += ",class_label,membership,device_id\n";
  for (const auto& o : split.observations) {
    for (Observer obs : {Observer::Provider, Observer::Adversary}) {
      const auto flat = o.features(obs).flat();
      if (flat.size() != n) throw InvalidInput("split has mixed feature lengths");
      out += std::to_string(o.id);
      out += ',';
      out += rfmia::to_string(obs);
      for (Eigen::Index k = 0; k < n; ++k) {
        out += ',';
        out += format_double(flat(k));
      }
      out += ',' + std::to_string(o.class_label) + ',' + std::string(to_string(o.membership)) + ',' +
             std::to_string(o.device_id) + '\n';
    }
  }
  return out;
}

Split split_from_csv(std::string name, std::string_view csv) {
  Split split{std::move(name), {}};
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty CSV");
  const auto header_fields = std::count(line.begin(), line.end(), ',') + 1;
  const auto n_features = header_fields - 5;
  if (n_features < 2 || n_features % 2 != 0) throw InvalidInput("CSV header has an odd feature count");

  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    fields.clear();
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (static_cast<long>(fields.size()) != header_fields) throw InvalidInput("CSV row has wrong field count");
    const auto id = std::stoll(std::string(fields[0]));
    const auto observer = observer_from_string(fields[1]);
    Eigen::VectorXd flat(n_features);
    for (long k = 0; k < n_features; ++k) flat(k) = parse_double(fields[static_cast<std::size_t>(2 + k)]);
    const auto fv = FeatureVector::from_flat(flat);
    if (observer == Observer::Provider) {
      PairedObservation o;
      o.id = id;
      o.provider = fv;
      o.class_label = std::stoi(std::string(fields[static_cast<std::size_t>(2 + n_features)]));
      o.membership = membership_from_string(fields[static_cast<std::size_t>(3 + n_features)]);
      o.device_id = std::stoi(std::string(fields[static_cast<std::size_t>(4 + n_features)]));
      split.observations.push_back(std::move(o));
    } else {
      if (split.observations.empty() || split.observations.back().id != id)
        throw InvalidInput("CSV adversary row without a preceding provider row");
      split.observations.back().adversary = fv;
    }
  }
  return split;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : dataset.devices)
    devices.push_back({{"device_id", d.device_id},
                       {"phase_shift", d.phase_shift},
                       {"transmit_power", d.transmit_power},
                       {"modulation", std::string(to_string(d.modulation))},
                       {"role", std::string(to_string(d.role))},
                       {"snr_db", dataset.snr_db.at(d.device_id)}});
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : dataset.links)
    links.push_back({{"tx_device_id", l.tx_device_id},
                     {"rx", std::string(to_string(l.rx))},
                     {"session", l.session == Session::Train ? "train" : "deploy"},
                     {"gain", l.gain},
                     {"phase_offset", l.phase_offset}});
  nlohmann::json names = nlohmann::json::array();
  for (const auto& s : dataset.splits) names.push_back(s.name);
  const nlohmann::json meta = {{"scenario", dataset.config.to_json()},
                               {"devices", devices},
                               {"links", links},
                               {"splits", names}};
  for (const auto& s : dataset.splits) write_file_atomic(dir / (s.name + ".csv"), split_to_csv(s));
  write_file_atomic(dir / "scenario.json", meta.dump(2));
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto meta = read_json(dir / "scenario.json");
  Dataset ds;
  ds.config = ScenarioConfig::from_json(meta.at("scenario"));
  for (const auto& d : meta.at("devices")) {
    DeviceProfile p;
    p.device_id = d.at("device_id").get<int>();
    p.phase_shift = d.at("phase_shift").get<double>();
    p.transmit_power = d.at("transmit_power").get<double>();
    p.modulation = d.at("modulation").get<std::string>() == "BPSK" ? Modulation::BPSK : Modulation::QPSK;
    const auto role = d.at("role").get<std::string>();
    p.role = role == "authorized" ? DeviceRole::Authorized
             : role == "other"    ? DeviceRole::Other
                                  : DeviceRole::NonmemberGenerator;
    ds.snr_db[p.device_id] = d.at("snr_db").get<double>();
    ds.devices.push_back(p);
  }
  for (const auto& l : meta.at("links"))
    ds.links.push_back({l.at("tx_device_id").get<int>(), observer_from_string(l.at("rx").get<std::string>()),
                        l.at("session").get<std::string>() == "train" ? Session::Train : Session::Deploy,
                        l.at("gain").get<double>(), l.at("phase_offset").get<double>()});
  for (const auto& name : meta.at("splits")) {
    const auto n = name.get<std::string>();
    ds.splits.push_back(split_from_csv(n, read_file(dir / (n + ".csv"))));
  }
  return ds;
}

}  // namespace rfmia
