#include "cellsched/json_io.hpp"

#include <nlohmann/json.hpp>
#include <set>

namespace cellsched {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw ConfigError("unknown config key: " + prefix + "." + it.key());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key has wrong type: ") + key);
  }
}

}  // namespace

json env_config_to_json(const EnvConfig& cfg) {
  json j;
  j["num_ues"] = cfg.num_ues;
  j["num_rbgs"] = cfg.num_rbgs;
  j["duration_ttis"] = cfg.duration_ttis;
  j["buffer_capacity_bits"] = cfg.buffer_capacity_bits;
  j["arrival_rate_per_sec"] = cfg.traffic.arrival_rate_per_sec;
  j["tti_ms"] = cfg.traffic.tti_ms;
  j["packet_size_bits"] = cfg.traffic.packet_size_bits;
  j["max_delay_ttis"] = cfg.traffic.max_delay_ttis;
  j["fading_correlation"] = cfg.fading.correlation;
  j["fading_std_db"] = cfg.fading.std_db;
  j["ladder"] = {{"thresholds_db", cfg.ladder.thresholds_db},
                 {"rates_bits", cfg.ladder.rates_bits}};
  if (!cfg.mean_snr_db.empty()) j["mean_snr_db"] = cfg.mean_snr_db;
  j["snr_low_db"] = cfg.snr_low_db;
  j["snr_high_db"] = cfg.snr_high_db;
  j["avg_rate_window"] = cfg.avg_rate_window;
  return j;
}

EnvConfig env_config_from_json(const json& j, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix + " must be an object");
  reject_unknown_keys(
      j,
      {"num_ues", "num_rbgs", "duration_ttis", "buffer_capacity_bits",
       "arrival_rate_per_sec", "tti_ms", "packet_size_bits", "max_delay_ttis",
       "fading_correlation", "fading_std_db", "ladder", "re_per_rbg",
       "mean_snr_db", "snr_low_db", "snr_high_db", "avg_rate_window"},
      prefix);
  EnvConfig cfg;
  cfg.num_ues = get_or(j, "num_ues", cfg.num_ues);
  cfg.num_rbgs = get_or(j, "num_rbgs", cfg.num_rbgs);
  cfg.duration_ttis = get_or(j, "duration_ttis", cfg.duration_ttis);
  cfg.buffer_capacity_bits =
      get_or(j, "buffer_capacity_bits", cfg.buffer_capacity_bits);
  cfg.traffic.arrival_rate_per_sec =
      get_or(j, "arrival_rate_per_sec", cfg.traffic.arrival_rate_per_sec);
  cfg.traffic.tti_ms = get_or(j, "tti_ms", cfg.traffic.tti_ms);
  cfg.traffic.packet_size_bits =
      get_or(j, "packet_size_bits", cfg.traffic.packet_size_bits);
  cfg.traffic.max_delay_ttis =
      get_or(j, "max_delay_ttis", cfg.traffic.max_delay_ttis);
  cfg.fading.correlation =
      get_or(j, "fading_correlation", cfg.fading.correlation);
  cfg.fading.std_db = get_or(j, "fading_std_db", cfg.fading.std_db);
  if (j.contains("re_per_rbg"))
    cfg.ladder = RateLadder::lte_like(j.at("re_per_rbg").get<int>());
  if (j.contains("ladder")) {
    const json& l = j.at("ladder");
    reject_unknown_keys(l, {"thresholds_db", "rates_bits"}, prefix + ".ladder");
    cfg.ladder.thresholds_db =
        l.at("thresholds_db").get<std::vector<double>>();
    cfg.ladder.rates_bits =
        l.at("rates_bits").get<std::vector<std::int64_t>>();
  }
  cfg.mean_snr_db = get_or(j, "mean_snr_db", cfg.mean_snr_db);
  cfg.snr_low_db = get_or(j, "snr_low_db", cfg.snr_low_db);
  cfg.snr_high_db = get_or(j, "snr_high_db", cfg.snr_high_db);
  cfg.avg_rate_window = get_or(j, "avg_rate_window", cfg.avg_rate_window);
  cfg.validate();
  return cfg;
}

std::string to_canonical_string(const json& j) {
  // Sorted keys, no whitespace: stable across runs for hashing and headers.
  return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

}  // namespace cellsched
