#include "cellsched/trace.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cellsched/json_io.hpp"

namespace cellsched {

void Trace::begin_recording() { rows_.clear(); }

void Trace::push_rates(const std::vector<std::int64_t>& rates_kxb, int num_ues,
                       int num_rbgs) {
  TtiRow row;
  row.ues.resize(static_cast<std::size_t>(num_ues));
  for (int ue = 0; ue < num_ues; ++ue) {
    auto& r = row.ues[static_cast<std::size_t>(ue)].rates_bits;
    r.assign(rates_kxb.begin() + static_cast<std::ptrdiff_t>(ue) * num_rbgs,
             rates_kxb.begin() + static_cast<std::ptrdiff_t>(ue + 1) * num_rbgs);
  }
  rows_.push_back(std::move(row));
}

void Trace::push_arrivals(int ue, const std::vector<std::int64_t>& sizes) {
  rows_.back().ues[static_cast<std::size_t>(ue)].arrival_sizes = sizes;
}

std::uint64_t Trace::content_hash() const {
  std::uint64_t h = fnv1a64(to_canonical_string(env_config_to_json(cfg_)));
  h = fnv1a64_mix(h, seed_);
  for (const auto& row : rows_) {
    for (const auto& ue : row.ues) {
      for (auto r : ue.rates_bits) h = fnv1a64_mix(h, static_cast<std::uint64_t>(r));
      h = fnv1a64_mix(h, 0xa11ULL);
      for (auto s : ue.arrival_sizes) h = fnv1a64_mix(h, static_cast<std::uint64_t>(s));
    }
  }
  return h;
}

void Trace::save(std::ostream& os) const {
  os << "CELLSCHED-TRACE v1\n";
  os << "config " << to_canonical_string(env_config_to_json(cfg_)) << "\n";
  os << "seed " << seed_ << "\n";
  os << "ttis " << rows_.size() << "\n";
  for (std::size_t t = 0; t < rows_.size(); ++t) {
    os << "t " << t << "\n";
    const auto& row = rows_[t];
    for (std::size_t ue = 0; ue < row.ues.size(); ++ue) {
      os << "u " << ue << " r";
      for (auto r : row.ues[ue].rates_bits) os << ' ' << r;
      os << " a";
      for (auto s : row.ues[ue].arrival_sizes) os << ' ' << s;
      os << "\n";
    }
  }
  os << "end\n";
}

void Trace::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open trace file for writing: " + path);
  save(f);
  if (!f) throw ConfigError("failed while writing trace file: " + path);
}

namespace {

[[noreturn]] void bad_trace(const std::string& origin, const std::string& what) {
  throw ConfigError("malformed trace file " + origin + ": " + what);
}

}  // namespace

Trace Trace::load(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line) || line != "CELLSCHED-TRACE v1")
    bad_trace(origin, "missing CELLSCHED-TRACE v1 header");
  if (!std::getline(is, line) || line.rfind("config ", 0) != 0)
    bad_trace(origin, "missing config line");
  EnvConfig cfg;
  try {
    cfg = env_config_from_json(nlohmann::json::parse(line.substr(7)), "trace.config");
  } catch (const nlohmann::json::exception& e) {
    bad_trace(origin, std::string("config line is not valid JSON: ") + e.what());
  }
  std::uint64_t seed = 0;
  std::size_t ttis = 0;
  {
    if (!std::getline(is, line) || line.rfind("seed ", 0) != 0)
      bad_trace(origin, "missing seed line");
    std::istringstream ss(line.substr(5));
    if (!(ss >> seed)) bad_trace(origin, "bad seed value");
  }
  {
    if (!std::getline(is, line) || line.rfind("ttis ", 0) != 0)
      bad_trace(origin, "missing ttis line");
    std::istringstream ss(line.substr(5));
    if (!(ss >> ttis)) bad_trace(origin, "bad ttis value");
  }

  Trace trace(cfg, seed);
  trace.rows_.resize(ttis);
  for (std::size_t t = 0; t < ttis; ++t) {
    if (!std::getline(is, line)) bad_trace(origin, "truncated rows");
    std::istringstream ss(line);
    std::string tag;
    std::size_t idx = 0;
    if (!(ss >> tag >> idx) || tag != "t" || idx != t)
      bad_trace(origin, "bad tti header at row " + std::to_string(t));
    auto& row = trace.rows_[t];
    row.ues.resize(static_cast<std::size_t>(cfg.num_ues));
    for (int ue = 0; ue < cfg.num_ues; ++ue) {
      if (!std::getline(is, line)) bad_trace(origin, "truncated UE rows");
      std::istringstream us(line);
      std::size_t uidx = 0;
      if (!(us >> tag >> uidx) || tag != "u" ||
          uidx != static_cast<std::size_t>(ue))
        bad_trace(origin, "bad UE header in tti " + std::to_string(t));
      if (!(us >> tag) || tag != "r") bad_trace(origin, "missing rates");
      auto& urow = row.ues[static_cast<std::size_t>(ue)];
      urow.rates_bits.resize(static_cast<std::size_t>(cfg.num_rbgs));
      for (int b = 0; b < cfg.num_rbgs; ++b) {
        if (!(us >> urow.rates_bits[static_cast<std::size_t>(b)]))
          bad_trace(origin, "missing rate value");
      }
      if (!(us >> tag) || tag != "a") bad_trace(origin, "missing arrivals");
      std::int64_t size = 0;
      while (us >> size) urow.arrival_sizes.push_back(size);
    }
  }
  if (!std::getline(is, line) || line != "end")
    bad_trace(origin, "missing end marker");
  return trace;
}

Trace Trace::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("trace file does not exist: " + path);
  return load(f, path);
}

Trace Trace::record(const EnvConfig& cfg, std::uint64_t seed) {
  Trace trace(cfg, seed);
  CellEnv env(cfg, seed);
  env.attach_recorder(&trace);
  env.reset();  // re-runs row 0 with the recorder attached
  const std::vector<int> idle(static_cast<std::size_t>(cfg.num_rbgs), -1);
  while (!env.done()) env.apply_decision(idle);
  return trace;
}

}  // namespace cellsched
