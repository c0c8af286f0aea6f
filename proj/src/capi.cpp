#include "dekg/dekg.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <sstream>
#include <new>
#include <set>
#include <string>

#include "dekg/checkpoint.hpp"
#include "dekg/config.hpp"
#include "dekg/error.hpp"
#include "dekg/evaluation.hpp"
#include "dekg/sweep.hpp"
#include "dekg/theory.hpp"
#include "dekg/training.hpp"

struct dekg_config {
  dekg::ConfigEntries entries;
  dekg::TrainConfig resolved;
};

struct dekg_dataset {
  dekg::Dataset ds;
};

struct dekg_model {
  dekg::TrainConfig config;
  dekg::Vocabulary vocab;
  dekg::ModelParams params;
  std::vector<dekg::HistoryRow> history;
  int best_epoch = 0;
  double best_val_mrr = std::nan("");
};

namespace {

thread_local std::string g_last_error;

int status_of(dekg::ErrorKind kind) {
  using dekg::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument: return DEKG_ERR_INVALID_ARGUMENT;
    case ErrorKind::Io: return DEKG_ERR_IO;
    case ErrorKind::Parse: return DEKG_ERR_PARSE;
    case ErrorKind::Dimension: return DEKG_ERR_DIMENSION;
    case ErrorKind::Index: return DEKG_ERR_INDEX;
    case ErrorKind::Numeric: return DEKG_ERR_NUMERIC;
    case ErrorKind::Constraint: return DEKG_ERR_CONSTRAINT;
    case ErrorKind::DegenerateSplit: return DEKG_ERR_DEGENERATE_SPLIT;
    case ErrorKind::Checkpoint: return DEKG_ERR_CHECKPOINT;
    case ErrorKind::Verification: return DEKG_ERR_VERIFICATION;
    case ErrorKind::Config: return DEKG_ERR_CONFIG;
    case ErrorKind::Construction: return DEKG_ERR_CONSTRUCTION;
  }
  return DEKG_ERR_INTERNAL;
}

template <typename F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return DEKG_OK;
  } catch (const dekg::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DEKG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DEKG_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw dekg::Error(dekg::ErrorKind::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

dekg::Split split_arg(const char* name) {
  require(name != nullptr, "split is null");
  const auto s = dekg::parse_split(name);
  if (!s) throw dekg::Error(dekg::ErrorKind::InvalidArgument, std::string("unknown split '") + name + "'");
  return *s;
}

}  // namespace

extern "C" {

const char* dekg_last_error(void) { return g_last_error.c_str(); }

const char* dekg_status_name(int status) {
  switch (status) {
    case DEKG_OK: return "ok";
    case DEKG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DEKG_ERR_IO: return "io error";
    case DEKG_ERR_PARSE: return "parse error";
    case DEKG_ERR_DIMENSION: return "dimension mismatch";
    case DEKG_ERR_INDEX: return "index out of range";
    case DEKG_ERR_NUMERIC: return "numeric failure";
    case DEKG_ERR_CONSTRAINT: return "constraint violation";
    case DEKG_ERR_DEGENERATE_SPLIT: return "degenerate split";
    case DEKG_ERR_CHECKPOINT: return "checkpoint error";
    case DEKG_ERR_VERIFICATION: return "verification failure";
    case DEKG_ERR_CONFIG: return "config error";
    case DEKG_ERR_CONSTRUCTION: return "construction error";
    default: return "internal error";
  }
}

void dekg_string_free(char* s) { std::free(s); }

int dekg_config_new(dekg_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new dekg_config();
  });
}

int dekg_config_load(const char* path, dekg_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto cfg = std::make_unique<dekg_config>();
    cfg->resolved = dekg::load_config(path);
    cfg->resolved.validate();
    // keep the entries so later overrides resolve gamma against the final dim
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg->entries = dekg::parse_config_entries(ss.str(), path);
    *out = cfg.release();
  });
}

void dekg_config_free(dekg_config* cfg) { delete cfg; }

int dekg_config_set(dekg_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr && value != nullptr, "null argument");
    auto entries = cfg->entries;
    entries.emplace_back(key, value);
    dekg::TrainConfig c;
    dekg::apply_config(c, entries);
    c.validate();
    cfg->entries = std::move(entries);
    cfg->resolved = c;
  });
}

int dekg_config_to_string(const dekg_config* cfg, char** out) {
  return guarded([&] {
    require(cfg != nullptr && out != nullptr, "null argument");
    *out = dup_string(dekg::serialize_config(cfg->resolved));
  });
}

size_t dekg_config_key_count(void) { return dekg::config_keys().size(); }

const char* dekg_config_key(size_t i) {
  const auto& keys = dekg::config_keys();
  return i < keys.size() ? keys[i].c_str() : nullptr;
}

int dekg_dataset_load(const char* dir, const char* time_format, dekg_dataset** out) {
  return guarded([&] {
    require(dir != nullptr && out != nullptr, "null argument");
    auto fmt = dekg::TimeFormat::Auto;
    if (time_format != nullptr) {
      const auto f = dekg::parse_time_format(time_format);
      if (!f) throw dekg::Error(dekg::ErrorKind::InvalidArgument, std::string("unknown time format '") + time_format + "'");
      fmt = *f;
    }
    auto ds = std::make_unique<dekg_dataset>();
    ds->ds = dekg::load_tsv(dir, fmt);
    *out = ds.release();
  });
}

void dekg_dataset_free(dekg_dataset* ds) { delete ds; }

int dekg_dataset_info_get(const dekg_dataset* ds, dekg_dataset_info* out) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr, "null argument");
    const auto& d = ds->ds;
    *out = {d.vocab.num_entities(), d.vocab.num_relations(), d.vocab.num_timestamps(),
            d.train.size(), d.valid.size(), d.test.size()};
  });
}

int dekg_dataset_write(const dekg_dataset* ds, const char* dir) {
  return guarded([&] {
    require(ds != nullptr && dir != nullptr, "null argument");
    dekg::write_dataset(ds->ds, dir);
  });
}

int dekg_dataset_shared_timestamps(const dekg_dataset* ds, const char* split_a,
                                   const char* split_b, size_t* out) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr, "null argument");
    *out = dekg::shared_timestamp_count(ds->ds, split_arg(split_a), split_arg(split_b));
  });
}

int dekg_dataset_split_unseen(const dekg_dataset* ds, const int* days, size_t num_days,
                              uint64_t seed, dekg_dataset** out, size_t* dropped) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr && (days != nullptr || num_days == 0), "null argument");
    std::set<int> day_set(days, days + num_days);
    dekg::Rng rng(seed);
    auto split = dekg::make_unseen_timestamp_split(ds->ds, day_set, rng);
    auto result = std::make_unique<dekg_dataset>();
    result->ds = std::move(split.dataset);
    if (dropped != nullptr) *dropped = split.dropped;
    *out = result.release();
  });
}

int dekg_train(const dekg_config* cfg, const dekg_dataset* ds, dekg_history_fn fn, void* user,
               dekg_model** out) {
  return guarded([&] {
    require(cfg != nullptr && ds != nullptr && out != nullptr, "null argument");
    dekg::HistoryCallback cb;
    if (fn != nullptr) cb = [&](const dekg::HistoryRow& r) { fn(r.epoch, r.loss, r.val_mrr, user); };
    auto result = dekg::train(cfg->resolved, ds->ds, cb);
    auto m = std::make_unique<dekg_model>();
    m->config = cfg->resolved;
    m->vocab = ds->ds.vocab;
    m->params = std::move(result.params);
    m->history = std::move(result.history);
    m->best_epoch = result.best_epoch;
    m->best_val_mrr = result.best_val_mrr;
    *out = m.release();
  });
}

void dekg_model_free(dekg_model* model) { delete model; }

int dekg_model_info_get(const dekg_model* model, dekg_model_info* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    std::size_t n = 0;
    for (const auto& t : model->params.tables()) n += t.data.size();
    *out = {model->best_epoch, model->best_val_mrr, model->history.size(), n};
  });
}

int dekg_model_history_csv(const dekg_model* model, char** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    std::string s = "epoch,loss,val_mrr\n";
    char buf[128];
    for (const auto& r : model->history) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.epoch, r.loss, r.val_mrr);
      s += buf;
    }
    *out = dup_string(s);
  });
}

int dekg_model_save(const dekg_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "null argument");
    dekg::Checkpoint ck;
    ck.config = model->config;
    ck.hashes = dekg::vocab_hashes(model->vocab);
    ck.best_epoch = model->best_epoch;
    ck.best_val_mrr = model->best_val_mrr;
    ck.params = model->params;
    dekg::save_checkpoint(path, ck);
  });
}

int dekg_model_load(const char* path, const dekg_dataset* ds, dekg_model** out) {
  return guarded([&] {
    require(path != nullptr && ds != nullptr && out != nullptr, "null argument");
    auto ck = dekg::load_checkpoint(path, &ds->ds.vocab);
    auto m = std::make_unique<dekg_model>();
    m->config = ck.config;
    m->vocab = ds->ds.vocab;
    m->params = std::move(ck.params);
    m->best_epoch = ck.best_epoch;
    m->best_val_mrr = ck.best_val_mrr;
    *out = m.release();
  });
}

int dekg_model_score(const dekg_model* model, int32_t head, int32_t relation, int32_t tail,
                     int32_t time_id, double* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    if (time_id < 0 || static_cast<std::size_t>(time_id) >= model->vocab.num_timestamps()) {
      throw dekg::Error(dekg::ErrorKind::Index, "timestamp id " + std::to_string(time_id) + " out of range");
    }
    dekg::Quadruple q{head, relation, tail, model->vocab.timestamp(time_id), time_id};
    *out = dekg::score(model->params, q);
  });
}

int dekg_evaluate(const dekg_model* model, const dekg_dataset* ds, const char* split,
                  const char* ties, int threads, dekg_metrics* out) {
  return guarded([&] {
    require(model != nullptr && ds != nullptr && out != nullptr, "null argument");
    if (dekg::vocab_hashes(model->vocab) != dekg::vocab_hashes(ds->ds.vocab)) {
      throw dekg::Error(dekg::ErrorKind::Checkpoint, "model vocabulary does not match the dataset");
    }
    dekg::EvalOptions opts;
    opts.threads = threads > 0 ? threads : 1;
    if (ties != nullptr) {
      const std::string t = ties;
      if (t == "pessimistic") opts.ties = dekg::TieMode::Pessimistic;
      else if (t != "optimistic") throw dekg::Error(dekg::ErrorKind::InvalidArgument, "unknown tie mode '" + t + "'");
    }
    const auto filter = dekg::build_filter_index(ds->ds);
    const auto r = dekg::evaluate(model->params, ds->ds, split_arg(split), filter, opts);
    *out = {r.mrr, r.hit1, r.hit3, r.hit10, r.num_queries()};
  });
}

int dekg_report(const char* model_name, const char* split, const dekg_metrics* m, char** csv,
                char** table) {
  return guarded([&] {
    require(model_name != nullptr && split != nullptr && m != nullptr, "null argument");
    dekg::ReportRow row{model_name, split, {}};
    row.report.mrr = m->mrr;
    row.report.hit1 = m->hit1;
    row.report.hit3 = m->hit3;
    row.report.hit10 = m->hit10;
    const std::vector<dekg::ReportRow> rows{row};
    if (csv != nullptr) *csv = dup_string(dekg::report_csv(rows));
    if (table != nullptr) *table = dup_string(dekg::report_table(rows));
  });
}

const char* dekg_model_kind(const dekg_model* model) {
  if (model == nullptr) return "";
  return dekg::model_kind_name(model->params.config().kind).data();
}

int dekg_sweep(const dekg_config* cfg, const dekg_dataset* ds, const char* axis,
               const char* const* values, size_t num_values, char** csv, char** svg) {
  return guarded([&] {
    require(cfg != nullptr && ds != nullptr && axis != nullptr && values != nullptr, "null argument");
    const auto a = dekg::parse_sweep_axis(axis);
    if (!a) throw dekg::Error(dekg::ErrorKind::InvalidArgument, std::string("unknown sweep axis '") + axis + "'");
    dekg::SweepSpec spec;
    spec.axis = *a;
    spec.base = cfg->resolved;
    for (size_t i = 0; i < num_values; ++i) spec.values.emplace_back(values[i]);
    const auto points = dekg::run_sweep(spec, ds->ds);
    if (csv != nullptr) *csv = dup_string(dekg::sweep_csv(*a, points));
    if (svg != nullptr) *svg = dup_string(dekg::sweep_svg(*a, points));
  });
}

int dekg_training_curves(const dekg_config* cfg, const dekg_dataset* ds, const char* const* models,
                         size_t num_models, char** csv, char** svg) {
  return guarded([&] {
    require(cfg != nullptr && ds != nullptr && models != nullptr, "null argument");
    std::vector<dekg::ModelKind> kinds;
    for (size_t i = 0; i < num_models; ++i) {
      const auto k = dekg::parse_model_kind(models[i]);
      if (!k) throw dekg::Error(dekg::ErrorKind::InvalidArgument, std::string("unknown model '") + models[i] + "'");
      kinds.push_back(*k);
    }
    const auto series = dekg::run_training_curves(cfg->resolved, kinds, ds->ds);
    if (csv != nullptr) *csv = dup_string(dekg::curves_csv(series));
    if (svg != nullptr) *svg = dup_string(dekg::curves_svg(series));
  });
}

int dekg_theory_expressivity(int num_entities, int num_relations, int num_timestamps,
                             int block_length, int exhaustive, size_t random_worlds, uint64_t seed,
                             dekg_world_fn fn, void* user, dekg_expressivity_summary* out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = {};
    require(num_entities > 0 && num_relations > 0 && num_timestamps > 0 && block_length > 0,
            "sizes must be positive");
    const auto tuples = static_cast<std::size_t>(num_entities) * static_cast<std::size_t>(num_entities) *
                        static_cast<std::size_t>(num_relations) * static_cast<std::size_t>(num_timestamps);
    const auto dim = 2 * tuples / static_cast<std::size_t>(num_entities) * static_cast<std::size_t>(block_length);
    if (dim > dekg::kMaxTheoryDim) {
      throw dekg::Error(dekg::ErrorKind::InvalidArgument,
                        "construction dimension " + std::to_string(dim) + " exceeds the limit of " +
                            std::to_string(dekg::kMaxTheoryDim));
    }
    if (exhaustive && tuples > 16) {
      throw dekg::Error(dekg::ErrorKind::InvalidArgument,
                        "exhaustive enumeration is limited to 16 tuples (2^16 worlds)");
    }
    auto run = [&](const dekg::WorldSpec& w, std::size_t index) {
      const auto rep = dekg::verify_expressivity(w, block_length);
      ++out->worlds;
      out->tuples += rep.tuples;
      const auto mism = rep.component_mismatches + rep.score_mismatches;
      out->mismatches += mism;
      out->max_indicator_error = std::max(out->max_indicator_error, rep.max_indicator_error);
      if (!rep.passed()) ++out->worlds_failed;
      if (fn != nullptr) fn(index, rep.passed() ? 1 : 0, mism, rep.max_indicator_error, user);
    };
    if (exhaustive) {
      const std::uint64_t count = 1ULL << tuples;
      for (std::uint64_t bits = 0; bits < count; ++bits) {
        run(dekg::WorldSpec::from_bits(num_entities, num_relations, num_timestamps, bits), bits);
      }
    } else {
      dekg::Rng rng(seed);
      for (size_t i = 0; i < random_worlds; ++i) {
        run(dekg::WorldSpec::random(num_entities, num_relations, num_timestamps, rng), i);
      }
    }
  });
}

int dekg_theory_tying(const char* scheme, const char* model_kind, int num_entities, int dim,
                      size_t samples, uint64_t seed, int negative_delta, dekg_tying_summary* out) {
  return guarded([&] {
    require(scheme != nullptr && model_kind != nullptr && out != nullptr, "null argument");
    *out = {};
    const auto kind = dekg::parse_model_kind(model_kind);
    if (!kind) throw dekg::Error(dekg::ErrorKind::InvalidArgument, std::string("unknown model '") + model_kind + "'");
    const std::string s = scheme;
    dekg::TyingScheme ts;
    if (s == "symmetric") ts = dekg::TyingScheme::symmetric(0);
    else if (s == "anti-symmetric") ts = dekg::TyingScheme::anti_symmetric(0);
    else if (s == "inverse") ts = dekg::TyingScheme::inverse(0, 1);
    else if (s == "entails") ts.kind = dekg::TyingKind::Entails;
    else throw dekg::Error(dekg::ErrorKind::InvalidArgument, "unknown tying scheme '" + s + "'");

    dekg::Rng rng(seed);
    const bool entails = ts.kind == dekg::TyingKind::Entails;
    const dekg::Activation act{entails ? dekg::ActivationKind::Sigmoid : dekg::ActivationKind::Sine};
    const auto params = dekg::random_tying_params(*kind, num_entities, 2, dim, dim / 2, act, entails, rng);
    if (entails) {
      dekg::Vec df = dekg::init_uniform(rng, static_cast<std::size_t>(dim), 1.0);
      dekg::Vec db = dekg::init_uniform(rng, static_cast<std::size_t>(dim), 1.0);
      for (auto* d : {&df, &db}) {
        for (double& x : *d) x = std::abs(x);
      }
      if (negative_delta) df[0] = -0.5;
      ts = dekg::TyingScheme::entails(0, 1, df, db);
    }
    const auto tied = dekg::apply_tying(params, ts);
    const auto rep = dekg::check_tying(tied, ts, samples, rng);
    *out = {rep.checked, rep.violations};
    if (!rep.passed()) {
      throw dekg::Error(dekg::ErrorKind::Verification,
                        std::to_string(rep.violations) + " of " + std::to_string(rep.checked) +
                            " sampled tuples violate the " + s + " identity");
    }
  });
}

}  // extern "C"
