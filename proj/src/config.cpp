#include "dekg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "dekg/error.hpp"

namespace dekg {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorKind::Config, "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

int to_int(std::string_view key, std::string_view v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "model",         "dim",            "temporal_dim",         "gamma",
      "activation",    "leaky_slope",    "dropout",              "learning_rate",
      "batch_size",    "negative_ratio", "epochs",               "validate_every",
      "seed",          "deterministic",  "threads",              "filter_negatives",
      "diachronic_relations", "amplitude_per_component", "ablation", "normalize_dates",
      "nonnegative_entities", "time_format"};
  return keys;
}

std::string ablation_name(Ablation a) {
  if (a == Ablation::None) return "none";
  std::string out;
  auto add = [&](Ablation f, const char* name) {
    if (!has_flag(a, f)) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(Ablation::FixAmplitude, "fix-a");
  add(Ablation::FixFrequency, "fix-w");
  add(Ablation::FixPhase, "fix-b");
  return out;
}

Ablation parse_ablation(std::string_view text) {
  Ablation out = Ablation::None;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('+', start);
    if (end == std::string_view::npos) end = text.size();
    const auto part = trim(text.substr(start, end - start));
    if (part == "fix-a") out = out | Ablation::FixAmplitude;
    else if (part == "fix-w") out = out | Ablation::FixFrequency;
    else if (part == "fix-b") out = out | Ablation::FixPhase;
    else if (part != "none" || text != "none") bad_value("ablation", text);
    start = end + 1;
  }
  return out;
}

ConfigEntries parse_config_entries(std::string_view text, std::string_view source) {
  ConfigEntries out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Config, std::string(source) + ":" + std::to_string(line_no) +
                                         ": expected key = value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_config(TrainConfig& c, const ConfigEntries& entries) {
  std::optional<double> gamma;
  bool dim_set = false, temporal_set = false;
  const double ratio = c.model.dim > 0 ? static_cast<double>(c.model.temporal_dim) / c.model.dim : 0.0;
  for (const auto& [key, value] : entries) {
    const std::string_view v = value;
    auto& m = c.model;
    if (key == "model") {
      const auto k = parse_model_kind(v);
      if (!k) bad_value(key, v);
      m.kind = *k;
    } else if (key == "dim") {
      m.dim = to_int(key, v);
      dim_set = true;
    } else if (key == "temporal_dim") {
      m.temporal_dim = to_int(key, v);
      temporal_set = true;
      gamma.reset();
    } else if (key == "gamma") {
      gamma = to_double(key, v);
    } else if (key == "activation") {
      const auto a = parse_activation(v);
      if (!a) bad_value(key, v);
      m.activation.kind = *a;
    } else if (key == "leaky_slope") {
      m.activation.slope = to_double(key, v);
    } else if (key == "dropout") {
      c.dropout = to_double(key, v);
    } else if (key == "learning_rate") {
      c.learning_rate = to_double(key, v);
    } else if (key == "batch_size") {
      c.batch_size = to_int(key, v);
    } else if (key == "negative_ratio") {
      c.negative_ratio = to_int(key, v);
    } else if (key == "epochs") {
      c.epochs = to_int(key, v);
    } else if (key == "validate_every") {
      c.validate_every = to_int(key, v);
    } else if (key == "seed") {
      c.seed = to_u64(key, v);
    } else if (key == "deterministic") {
      c.deterministic = to_bool(key, v);
    } else if (key == "threads") {
      c.threads = to_int(key, v);
    } else if (key == "filter_negatives") {
      c.filter_negatives = to_bool(key, v);
    } else if (key == "diachronic_relations") {
      m.diachronic_relations = to_bool(key, v);
    } else if (key == "amplitude_per_component") {
      m.amplitude_per_component = to_bool(key, v);
    } else if (key == "ablation") {
      m.ablation = parse_ablation(v);
    } else if (key == "normalize_dates") {
      m.normalize_dates = to_bool(key, v);
    } else if (key == "nonnegative_entities") {
      c.nonnegative_entities = to_bool(key, v);
    } else if (key == "time_format") {
      const auto f = parse_time_format(v);
      if (!f) bad_value(key, v);
      c.time_format = *f;
    } else {
      throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
    }
  }
  if (!gamma && dim_set && !temporal_set && c.model.dim > 0) gamma = ratio;
  if (gamma) {
    try {
      c.model.temporal_dim = temporal_dim_from_gamma(*gamma, c.model.dim);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.what());
    }
  }
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig c;
  apply_config(c, parse_config_entries(text));
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  TrainConfig c;
  apply_config(c, parse_config_entries(ss.str(), path.string()));
  return c;
}

std::string serialize_config(const TrainConfig& c) {
  const auto& m = c.model;
  auto b = [](bool x) { return x ? "true" : "false"; };
  std::ostringstream out;
  out << "model = " << model_kind_name(m.kind) << '\n'
      << "dim = " << m.dim << '\n'
      << "temporal_dim = " << m.temporal_dim << '\n'
      << "activation = " << activation_name(m.activation.kind) << '\n'
      << "leaky_slope = " << fmt_double(m.activation.slope) << '\n'
      << "dropout = " << fmt_double(c.dropout) << '\n'
      << "learning_rate = " << fmt_double(c.learning_rate) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "negative_ratio = " << c.negative_ratio << '\n'
      << "epochs = " << c.epochs << '\n'
      << "validate_every = " << c.validate_every << '\n'
      << "seed = " << c.seed << '\n'
      << "deterministic = " << b(c.deterministic) << '\n'
      << "threads = " << c.threads << '\n'
      << "filter_negatives = " << b(c.filter_negatives) << '\n'
      << "diachronic_relations = " << b(m.diachronic_relations) << '\n'
      << "amplitude_per_component = " << b(m.amplitude_per_component) << '\n'
      << "ablation = " << ablation_name(m.ablation) << '\n'
      << "normalize_dates = " << b(m.normalize_dates) << '\n'
      << "nonnegative_entities = " << b(c.nonnegative_entities) << '\n'
      << "time_format = " << time_format_name(c.time_format) << '\n';
  return out.str();
}

}  // namespace dekg
