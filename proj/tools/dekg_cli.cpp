#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dekg/dekg.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitVerification = 3;

struct Failure {
  int status;
  std::string message;
};

void check(int status) {
  if (status != DEKG_OK) throw Failure{status, dekg_last_error()};
}

struct Str {
  char* p = nullptr;
  ~Str() { dekg_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using ConfigPtr = std::unique_ptr<dekg_config, decltype(&dekg_config_free)>;
using DatasetPtr = std::unique_ptr<dekg_dataset, decltype(&dekg_dataset_free)>;
using ModelPtr = std::unique_ptr<dekg_model, decltype(&dekg_model_free)>;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{DEKG_ERR_IO, "cannot write " + path.string()};
  out << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct DataArgs {
  std::string path;
  bool large = false;
};

void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("--data", d.path,
                  "Dataset directory with train.txt, valid.txt, test.txt; relative names are also "
                  "looked up under $DEKG_DATA_ROOT")
      ->required();
  app->add_flag("--large", d.large, "Allow GDELT-scale datasets (long runtime)");
}

fs::path resolve_data(const DataArgs& d) {
  fs::path p = d.path;
  if (!fs::exists(p) && p.is_relative()) {
    if (const char* root = std::getenv("DEKG_DATA_ROOT"); root != nullptr && *root != '\0') {
      p = fs::path(root) / p;
    }
  }
  if (!fs::is_directory(p)) throw Failure{DEKG_ERR_IO, "dataset directory not found: " + d.path};
  std::string name = fs::absolute(p).lexically_normal().string();
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  if (name.find("gdelt") != std::string::npos) {
    if (!d.large) {
      throw Failure{DEKG_ERR_INVALID_ARGUMENT,
                    "GDELT-scale dataset requested; pass --large to confirm (runs take many hours)"};
    }
    std::cerr << "warning: large dataset, expect a long runtime\n";
  }
  return p;
}

DatasetPtr load_dataset(const DataArgs& d, const dekg_config* cfg) {
  fs::path dir = resolve_data(d);
  std::string fmt = "auto";
  if (cfg != nullptr) {
    Str s;
    check(dekg_config_to_string(cfg, &s.p));
    const auto text = s.str();
    const auto pos = text.find("time_format = ");
    if (pos != std::string::npos) {
      fmt = text.substr(pos + 14, text.find('\n', pos) - pos - 14);
    }
  }
  dekg_dataset* ds = nullptr;
  check(dekg_dataset_load(dir.string().c_str(), fmt.c_str(), &ds));
  return DatasetPtr(ds, dekg_dataset_free);
}

struct ConfigArgs {
  std::string file;
  std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App* app, ConfigArgs& c) {
  app->add_option("--config", c.file, "Config file (key = value lines)");
  for (std::size_t i = 0; i < dekg_config_key_count(); ++i) {
    const std::string key = dekg_config_key(i);
    app->add_option_function<std::string>(
        "--" + key, [&c, key](const std::string& v) { c.overrides[key] = v; },
        "Override config key " + key);
  }
}

ConfigPtr build_config(const ConfigArgs& args) {
  dekg_config* cfg = nullptr;
  if (args.file.empty()) {
    check(dekg_config_new(&cfg));
  } else {
    check(dekg_config_load(args.file.c_str(), &cfg));
  }
  ConfigPtr out(cfg, dekg_config_free);
  // dim before gamma so the fraction resolves against the overridden width
  for (const char* key : {"dim"}) {
    if (auto it = args.overrides.find(key); it != args.overrides.end()) {
      check(dekg_config_set(cfg, key, it->second.c_str()));
    }
  }
  for (const auto& [k, v] : args.overrides) {
    if (k == "dim") continue;
    check(dekg_config_set(cfg, k.c_str(), v.c_str()));
  }
  return out;
}

void print_report(const std::string& model, const std::string& split, const dekg_metrics& m,
                  const fs::path& csv_path) {
  Str csv, table;
  check(dekg_report(model.c_str(), split.c_str(), &m, &csv.p, &table.p));
  std::cout << table.str();
  if (!csv_path.empty()) write_file(csv_path, csv.str());
}

void history_printer(int epoch, double loss, double val_mrr, void*) {
  std::printf("epoch %5d  loss %.6f  valid MRR %.4f\n", epoch, loss, val_mrr);
  std::fflush(stdout);
}

void world_printer(std::size_t index, int passed, std::size_t mismatches, double err, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::printf("world %6zu  %s  mismatches=%zu  indicator_err=%.3g\n", index, passed ? "PASS" : "FAIL",
              mismatches, err);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal knowledge graph completion with diachronic embeddings"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  ConfigArgs train_cfg;
  DataArgs train_data;
  std::string train_out;
  add_config_options(train, train_cfg);
  add_data_options(train, train_data);
  train->add_option("--out", train_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with filtered ranking");
  DataArgs eval_data;
  std::string eval_ckpt, eval_split = "test", eval_ties = "optimistic", eval_csv;
  int eval_threads = 1;
  add_data_options(eval, eval_data);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--split", eval_split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("--ties", eval_ties, "optimistic or pessimistic")->check(CLI::IsMember({"optimistic", "pessimistic"}));
  eval->add_option("--threads", eval_threads, "Evaluation threads")->check(CLI::PositiveNumber);
  eval->add_option("--csv", eval_csv, "Write the report as CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Train over one axis of values, or record training curves");
  ConfigArgs sweep_cfg;
  DataArgs sweep_data;
  std::string sweep_axis, sweep_values, sweep_models = "DE-DistMult,DistMult", sweep_out;
  add_config_options(sweep, sweep_cfg);
  add_data_options(sweep, sweep_data);
  sweep->add_option("--axis", sweep_axis, "gamma, activation, dropout or curve")
      ->required()
      ->check(CLI::IsMember({"gamma", "activation", "dropout", "curve"}));
  sweep->add_option("--values", sweep_values, "Comma-separated axis values");
  sweep->add_option("--models", sweep_models, "Comma-separated model kinds for --axis curve");
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  // split-unseen
  auto* split = app.add_subcommand("split-unseen", "Hold out chosen days of the month as valid/test");
  DataArgs split_data;
  std::string split_days = "5,15,25", split_out;
  std::uint64_t split_seed = 1;
  add_data_options(split, split_data);
  split->add_option("--days", split_days, "Comma-separated days of the month");
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->add_option("--out", split_out, "Output dataset directory")->required();

  // theory
  auto* theory = app.add_subcommand("theory", "Check the expressivity and tying constructions");
  theory->require_subcommand(1);
  auto* expr = theory->add_subcommand("expressivity", "Construct and verify parameters for worlds");
  int ex_v = 2, ex_r = 1, ex_t = 2, ex_l = 0;
  bool ex_exhaustive = false, ex_quiet = false;
  std::size_t ex_worlds = 100;
  std::uint64_t ex_seed = 1;
  expr->add_option("--entities", ex_v)->check(CLI::PositiveNumber);
  expr->add_option("--relations", ex_r)->check(CLI::PositiveNumber);
  expr->add_option("--timestamps", ex_t)->check(CLI::PositiveNumber);
  expr->add_option("--block-length", ex_l, "Sine block length L (default |T|)");
  expr->add_flag("--exhaustive", ex_exhaustive, "Enumerate every truth table");
  expr->add_option("--worlds", ex_worlds, "Random worlds when not exhaustive");
  expr->add_option("--seed", ex_seed);
  expr->add_flag("--quiet", ex_quiet, "Only print the summary");

  auto* tying = theory->add_subcommand("tying", "Check relation tying schemes on random tuples");
  std::string ty_scheme = "all", ty_model = "DE-SimplE";
  int ty_entities = 10, ty_dim = 16;
  std::size_t ty_samples = 10000;
  std::uint64_t ty_seed = 1;
  bool ty_negative = false;
  tying->add_option("--scheme", ty_scheme, "symmetric, anti-symmetric, inverse, entails or all")
      ->check(CLI::IsMember({"all", "symmetric", "anti-symmetric", "inverse", "entails"}));
  tying->add_option("--model", ty_model, "SimplE or DE-SimplE");
  tying->add_option("--entities", ty_entities)->check(CLI::PositiveNumber);
  tying->add_option("--dim", ty_dim)->check(CLI::PositiveNumber);
  tying->add_option("--samples", ty_samples);
  tying->add_option("--seed", ty_seed);
  tying->add_flag("--negative-delta", ty_negative, "Inject a negative entailment delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      auto cfg = build_config(train_cfg);
      auto ds = load_dataset(train_data, cfg.get());
      fs::create_directories(train_out);
      dekg_model* raw = nullptr;
      check(dekg_train(cfg.get(), ds.get(), history_printer, nullptr, &raw));
      ModelPtr model(raw, dekg_model_free);
      const fs::path out = train_out;
      check(dekg_model_save(model.get(), (out / "checkpoint.bin").string().c_str()));
      Str hist, text;
      check(dekg_model_history_csv(model.get(), &hist.p));
      write_file(out / "history.csv", hist.str());
      check(dekg_config_to_string(cfg.get(), &text.p));
      write_file(out / "config.ini", text.str());
      dekg_dataset_info info{};
      check(dekg_dataset_info_get(ds.get(), &info));
      if (info.num_valid > 0) {
        dekg_metrics m{};
        check(dekg_evaluate(model.get(), ds.get(), "valid", nullptr, 1, &m));
        print_report(dekg_model_kind(model.get()), "valid", m, out / "valid_report.csv");
      }
      return 0;
    }
    if (*eval) {
      auto ds = load_dataset(eval_data, nullptr);
      dekg_model* raw = nullptr;
      check(dekg_model_load(eval_ckpt.c_str(), ds.get(), &raw));
      ModelPtr model(raw, dekg_model_free);
      dekg_metrics m{};
      check(dekg_evaluate(model.get(), ds.get(), eval_split.c_str(), eval_ties.c_str(), eval_threads, &m));
      print_report(dekg_model_kind(model.get()), eval_split, m, eval_csv);
      return 0;
    }
    if (*sweep) {
      auto cfg = build_config(sweep_cfg);
      auto ds = load_dataset(sweep_data, cfg.get());
      fs::create_directories(sweep_out);
      const fs::path out = sweep_out;
      Str csv, svg;
      if (sweep_axis == "curve") {
        const auto models = split_list(sweep_models);
        std::vector<const char*> ptrs;
        for (const auto& m : models) ptrs.push_back(m.c_str());
        check(dekg_training_curves(cfg.get(), ds.get(), ptrs.data(), ptrs.size(), &csv.p, &svg.p));
        write_file(out / "curves.csv", csv.str());
        write_file(out / "curves.svg", svg.str());
      } else {
        auto values = split_list(sweep_values);
        if (values.empty()) {
          if (sweep_axis == "gamma") values = {"0", "0.16", "0.32", "0.48", "0.64", "0.8", "1"};
          else if (sweep_axis == "activation") values = {"sine", "tanh", "sigmoid", "leaky-relu", "squared-exponential"};
          else values = {"0", "0.2", "0.4", "0.6"};
        }
        std::vector<const char*> ptrs;
        for (const auto& v : values) ptrs.push_back(v.c_str());
        check(dekg_sweep(cfg.get(), ds.get(), sweep_axis.c_str(), ptrs.data(), ptrs.size(), &csv.p, &svg.p));
        write_file(out / "sweep.csv", csv.str());
        write_file(out / "sweep.svg", svg.str());
      }
      std::cout << csv.str();
      return 0;
    }
    if (*split) {
      auto ds = load_dataset(split_data, nullptr);
      std::vector<int> days;
      for (const auto& s : split_list(split_days)) {
        try {
          days.push_back(std::stoi(s));
        } catch (const std::exception&) {
          throw Failure{DEKG_ERR_INVALID_ARGUMENT, "invalid day '" + s + "'"};
        }
      }
      dekg_dataset* raw = nullptr;
      std::size_t dropped = 0;
      check(dekg_dataset_split_unseen(ds.get(), days.data(), days.size(), split_seed, &raw, &dropped));
      DatasetPtr result(raw, dekg_dataset_free);
      fs::create_directories(split_out);
      check(dekg_dataset_write(result.get(), split_out.c_str()));
      dekg_dataset_info info{};
      check(dekg_dataset_info_get(result.get(), &info));
      std::size_t shared_valid = 0, shared_test = 0;
      check(dekg_dataset_shared_timestamps(result.get(), "train", "valid", &shared_valid));
      check(dekg_dataset_shared_timestamps(result.get(), "train", "test", &shared_test));
      std::printf("train %zu  valid %zu  test %zu  dropped %zu\n", info.num_train, info.num_valid,
                  info.num_test, dropped);
      std::printf("timestamps shared with train: valid %zu  test %zu\n", shared_valid, shared_test);
      return 0;
    }
    if (*expr) {
      dekg_expressivity_summary s{};
      const int l = ex_l > 0 ? ex_l : ex_t;
      check(dekg_theory_expressivity(ex_v, ex_r, ex_t, l, ex_exhaustive ? 1 : 0, ex_worlds, ex_seed,
                                     world_printer, &ex_quiet, &s));
      std::printf("expressivity |V|=%d |R|=%d |T|=%d L=%d: %zu worlds, %zu failed, %zu tuples, "
                  "%zu mismatches, max indicator error %.3g\n",
                  ex_v, ex_r, ex_t, l, s.worlds, s.worlds_failed, s.tuples, s.mismatches,
                  s.max_indicator_error);
      std::printf("%s\n", s.worlds_failed == 0 ? "PASS" : "FAIL");
      return s.worlds_failed == 0 ? 0 : kExitVerification;
    }
    if (*tying) {
      std::vector<std::string> schemes;
      if (ty_scheme == "all") schemes = {"symmetric", "anti-symmetric", "inverse", "entails"};
      else schemes = {ty_scheme};
      int rc = 0;
      for (const auto& s : schemes) {
        dekg_tying_summary sum{};
        const int st = dekg_theory_tying(s.c_str(), ty_model.c_str(), ty_entities, ty_dim, ty_samples,
                                         ty_seed, ty_negative ? 1 : 0, &sum);
        if (st == DEKG_OK) {
          std::printf("%-15s PASS  %zu tuples, 0 violations\n", s.c_str(), sum.checked);
        } else if (st == DEKG_ERR_CONSTRAINT) {
          std::printf("%-15s CONSTRAINT VIOLATION  %s\n", s.c_str(), dekg_last_error());
          rc = kExitVerification;
        } else if (st == DEKG_ERR_VERIFICATION) {
          std::printf("%-15s FAIL  %s\n", s.c_str(), dekg_last_error());
          rc = kExitVerification;
        } else {
          throw Failure{st, dekg_last_error()};
        }
      }
      return rc;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    if (f.status == DEKG_ERR_NUMERIC) return kExitNumeric;
    if (f.status == DEKG_ERR_VERIFICATION || f.status == DEKG_ERR_CONSTRAINT) return kExitVerification;
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}
