#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "dekg/checkpoint.hpp"
#include "dekg/config.hpp"
#include "dekg/training.hpp"
#include "dekg/dekg.h"
#include "support.hpp"

namespace {

std::filesystem::path tiny_dataset(const std::string& name) {
  dekg::Rng gen(12);
  const auto ds = testing::random_kg(gen, 10, 2, 4, 120);
  const auto dir = testing::temp_dir(name);
  dekg::write_dataset(ds, dir);
  return dir;
}

dekg_config* small_config() {
  dekg_config* c = nullptr;
  REQUIRE(dekg_config_new(&c) == DEKG_OK);
  for (auto [k, v] : {std::pair{"model", "DE-SimplE"}, {"dim", "8"}, {"gamma", "0.5"}, {"epochs", "4"},
                      {"validate_every", "2"}, {"batch_size", "32"}, {"negative_ratio", "4"},
                      {"learning_rate", "0.01"}}) {
    REQUIRE(dekg_config_set(c, k, v) == DEKG_OK);
  }
  return c;
}

}  // namespace

TEST_CASE("error codes and messages") {
  dekg_config* c = nullptr;
  CHECK(dekg_config_new(nullptr) == DEKG_ERR_INVALID_ARGUMENT);
  REQUIRE(dekg_config_new(&c) == DEKG_OK);
  CHECK(std::strlen(dekg_last_error()) == 0);
  CHECK(dekg_config_set(c, "colour", "red") == DEKG_ERR_CONFIG);
  CHECK(std::string(dekg_last_error()).find("colour") != std::string::npos);
  CHECK(dekg_config_set(c, "dropout", "1.5") == DEKG_ERR_CONFIG);
  CHECK(std::string(dekg_status_name(DEKG_ERR_NUMERIC)) == "numeric failure");
  dekg_dataset* ds = nullptr;
  CHECK(dekg_dataset_load("/nonexistent/dir", nullptr, &ds) == DEKG_ERR_IO);
  CHECK(ds == nullptr);
  CHECK(dekg_config_load("/nonexistent.ini", &c) == DEKG_ERR_IO);
  dekg_config_free(c);
  CHECK(dekg_config_key_count() > 10);
  CHECK(dekg_config_key(dekg_config_key_count()) == nullptr);
}

TEST_CASE("train, save, load and evaluate through the C API match the library") {
  const auto dir = tiny_dataset("capi");
  dekg_dataset* ds = nullptr;
  REQUIRE(dekg_dataset_load(dir.string().c_str(), "auto", &ds) == DEKG_OK);
  dekg_dataset_info info{};
  REQUIRE(dekg_dataset_info_get(ds, &info) == DEKG_OK);
  CHECK(info.num_entities == 10);

  dekg_config* cfg = small_config();
  int calls = 0;
  dekg_model* model = nullptr;
  REQUIRE(dekg_train(cfg, ds, [](int, double, double, void* u) { ++*static_cast<int*>(u); }, &calls, &model) == DEKG_OK);
  CHECK(calls == 2);
  CHECK(std::string(dekg_model_kind(model)) == "DE-SimplE");

  dekg_metrics m{};
  REQUIRE(dekg_evaluate(model, ds, "test", nullptr, 1, &m) == DEKG_OK);
  CHECK(m.num_queries == 2 * info.num_test);

  // library-level computation on identical inputs
  const auto lib_ds = dekg::load_tsv(dir);
  const auto lib_cfg = dekg::parse_config("model = DE-SimplE\ndim = 8\ngamma = 0.5\nepochs = 4\nvalidate_every = 2\n"
                                          "batch_size = 32\nnegative_ratio = 4\nlearning_rate = 0.01\n");
  const auto lib = dekg::train(lib_cfg, lib_ds);
  const auto rep = dekg::evaluate(lib.params, lib_ds, dekg::Split::Test, dekg::build_filter_index(lib_ds));
  CHECK(m.mrr == rep.mrr);
  CHECK(m.hit10 == rep.hit10);

  const auto ck = (dir / "model.bin").string();
  REQUIRE(dekg_model_save(model, ck.c_str()) == DEKG_OK);
  dekg_model* back = nullptr;
  REQUIRE(dekg_model_load(ck.c_str(), ds, &back) == DEKG_OK);
  dekg_metrics m2{};
  REQUIRE(dekg_evaluate(back, ds, "test", "optimistic", 2, &m2) == DEKG_OK);
  CHECK(m2.mrr == m.mrr);
  double s1 = 0, s2 = 0;
  REQUIRE(dekg_model_score(model, 0, 1, 2, 0, &s1) == DEKG_OK);
  REQUIRE(dekg_model_score(back, 0, 1, 2, 0, &s2) == DEKG_OK);
  CHECK(s1 == s2);
  CHECK(dekg_model_score(model, 0, 1, 2, 99, &s1) == DEKG_ERR_INDEX);
  CHECK(dekg_evaluate(model, ds, "dev", nullptr, 1, &m2) == DEKG_ERR_INVALID_ARGUMENT);

  char* csv = nullptr;
  REQUIRE(dekg_model_history_csv(model, &csv) == DEKG_OK);
  CHECK(std::string(csv).rfind("epoch,loss,val_mrr\n2,", 0) == 0);
  dekg_string_free(csv);

  // a different vocabulary is refused
  dekg::Rng other_gen(99);
  const auto other = testing::random_kg(other_gen, 7, 1, 3, 40);
  const auto other_dir = testing::temp_dir("capi_other");
  dekg::write_dataset(other, other_dir);
  dekg_dataset* ods = nullptr;
  REQUIRE(dekg_dataset_load(other_dir.string().c_str(), nullptr, &ods) == DEKG_OK);
  dekg_model* refused = nullptr;
  CHECK(dekg_model_load(ck.c_str(), ods, &refused) == DEKG_ERR_CHECKPOINT);
  CHECK(refused == nullptr);
  CHECK(dekg_evaluate(model, ods, "test", nullptr, 1, &m2) == DEKG_ERR_CHECKPOINT);

  dekg_model_free(back);
  dekg_model_free(model);
  dekg_config_free(cfg);
  dekg_dataset_free(ods);
  dekg_dataset_free(ds);
}

TEST_CASE("unseen split, sweep and theory through the C API") {
  const auto dir = testing::temp_dir("capi_split");
  std::vector<dekg::RawFact> train;
  for (int day = 1; day <= 28; ++day) {
    for (int k = 0; k < 5; ++k) train.push_back({testing::ename(k), "r", testing::ename((k + day) % 6), {2014, 2, day}});
  }
  dekg::write_dataset(dekg::build_dataset(train, {train[0]}, {train[1]}), dir);
  dekg_dataset* ds = nullptr;
  REQUIRE(dekg_dataset_load(dir.string().c_str(), nullptr, &ds) == DEKG_OK);
  const int days[] = {5, 15, 25};
  dekg_dataset* split = nullptr;
  size_t dropped = 0;
  REQUIRE(dekg_dataset_split_unseen(ds, days, 3, 1, &split, &dropped) == DEKG_OK);
  size_t shared = 1;
  REQUIRE(dekg_dataset_shared_timestamps(split, "train", "test", &shared) == DEKG_OK);
  CHECK(shared == 0);
  dekg_dataset_info info{};
  dekg_dataset_info_get(split, &info);
  CHECK(info.num_train + info.num_valid + info.num_test + dropped == 142);
  CHECK(dekg_dataset_split_unseen(ds, days, 0, 1, &split, &dropped) == DEKG_ERR_INVALID_ARGUMENT);

  dekg_config* cfg = small_config();
  dekg_config_set(cfg, "epochs", "2");
  const char* values[] = {"0", "0.4"};
  char *csv = nullptr, *svg = nullptr;
  REQUIRE(dekg_sweep(cfg, split, "dropout", values, 2, &csv, &svg) == DEKG_OK);
  CHECK(std::string(csv).find("dropout,0.4,ok") != std::string::npos);
  dekg_string_free(csv);
  dekg_string_free(svg);
  CHECK(dekg_sweep(cfg, split, "colour", values, 2, &csv, &svg) == DEKG_ERR_INVALID_ARGUMENT);

  dekg_expressivity_summary ex{};
  REQUIRE(dekg_theory_expressivity(2, 1, 2, 2, 1, 0, 0, nullptr, nullptr, &ex) == DEKG_OK);
  CHECK(ex.worlds == 256);
  CHECK(ex.worlds_failed == 0);
  CHECK(dekg_theory_expressivity(3, 2, 3, 3, 1, 0, 0, nullptr, nullptr, &ex) == DEKG_ERR_INVALID_ARGUMENT);
  CHECK(dekg_theory_expressivity(2, 1, 3, 2, 0, 1, 0, nullptr, nullptr, &ex) == DEKG_ERR_CONSTRUCTION);

  dekg_tying_summary ty{};
  CHECK(dekg_theory_tying("symmetric", "DE-SimplE", 6, 8, 500, 1, 0, &ty) == DEKG_OK);
  CHECK(ty.checked == 500);
  CHECK(dekg_theory_tying("entails", "SimplE", 6, 8, 500, 1, 1, &ty) == DEKG_ERR_CONSTRAINT);
  CHECK(dekg_theory_tying("symmetric", "DistMult", 6, 8, 500, 1, 0, &ty) == DEKG_ERR_INVALID_ARGUMENT);

  dekg_config_free(cfg);
  dekg_dataset_free(split);
  dekg_dataset_free(ds);
}
