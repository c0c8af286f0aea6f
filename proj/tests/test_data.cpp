#include <doctest.h>

#include <fstream>

#include "dekg/data.hpp"
#include "dekg/error.hpp"
#include "support.hpp"

using namespace dekg;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("date parsing") {
  CHECK(parse_date("2014-03-05") == Date{2014, 3, 5});
  CHECK(parse_date("2012-02-29") == Date{2012, 2, 29});
  CHECK(parse_date("17") == Date{0, 0, 17});
  CHECK(parse_date("17").is_integer_stamp());
  CHECK(parse_date("2014-03-05", TimeFormat::Iso) == Date{2014, 3, 5});
  CHECK(kind_of([] { parse_date("2013-02-29"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_date("2014-13-01"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_date("2014-3-5"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_date("17", TimeFormat::Iso); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_date("2014-03-05", TimeFormat::Integer); }) == ErrorKind::Parse);
  CHECK(Date{2014, 3, 5}.to_string() == "2014-03-05");
  CHECK(Date{0, 0, 9}.to_string() == "9");
  CHECK(Date{2014, 1, 2} < Date{2014, 2, 1});
}

TEST_CASE("fact files: ids, errors and round trip") {
  const auto dir = testing::temp_dir("data_rt");
  write(dir / "train.txt", "a\tlikes\tb\t2014-01-02\r\nb\tlikes\tc\t2014-01-01\n\nc\thates\ta\t2014-01-03\n");
  write(dir / "valid.txt", "a\thates\tc\t2014-01-02\n");
  write(dir / "test.txt", "d\tlikes\ta\t2014-01-04\n");
  const auto ds = load_tsv(dir);
  CHECK(ds.vocab.num_entities() == 4);
  CHECK(ds.vocab.num_relations() == 2);
  CHECK(ds.vocab.num_timestamps() == 4);
  CHECK(ds.vocab.find_entity("a") == 0);
  CHECK(ds.vocab.find_entity("b") == 1);
  CHECK(ds.vocab.find_entity("c") == 2);
  CHECK(ds.vocab.find_entity("d") == 3);
  CHECK(ds.vocab.find_relation("hates") == 1);
  CHECK(ds.train.size() == 3);
  CHECK(ds.train[1].time == 0);  // timestamps are sorted
  CHECK(ds.num_facts() == 5);

  const auto out = testing::temp_dir("data_rt_out");
  write_dataset(ds, out);
  const auto back = load_tsv(out);
  CHECK(back.train == ds.train);
  CHECK(back.valid == ds.valid);
  CHECK(back.test == ds.test);

  write(dir / "bad.txt", "a\tb\tc\t2014-01-01\nx\ty\tz\n");
  try {
    read_fact_file(dir / "bad.txt");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("bad.txt:2") != std::string::npos);
  }
  CHECK(kind_of([&] { load_tsv(dir / "missing"); }) == ErrorKind::Io);
}

TEST_CASE("vocabulary lookups") {
  Vocabulary v;
  CHECK(v.add_entity("x") == 0);
  CHECK(v.add_entity("y") == 1);
  CHECK(v.add_entity("x") == 0);
  CHECK_FALSE(v.find_entity("z").has_value());
  CHECK(kind_of([&] { v.entity_name(7); }) == ErrorKind::Index);
  v.set_timestamps({Date{2014, 2, 1}, Date{2014, 1, 1}, Date{2014, 2, 1}});
  CHECK(v.num_timestamps() == 2);
  CHECK(v.find_timestamp(Date{2014, 2, 1}) == 1);
}

TEST_CASE("filter index") {
  FilterIndex f;
  f.add({0, 0, 1, {}, 0});
  f.add({0, 0, 2, {}, 0});
  f.add({0, 0, 2, {}, 0});
  f.add({0, 0, 3, {}, 1});
  f.finalize();
  const auto t = f.tails(0, 0, 0);
  CHECK(std::vector<EntityId>(t.begin(), t.end()) == std::vector<EntityId>{1, 2});
  CHECK(f.has_tail(0, 0, 1, 3));
  CHECK_FALSE(f.has_tail(0, 0, 0, 3));
  CHECK(f.has_head(0, 2, 0, 0));
  CHECK(f.tails(5, 0, 0).empty());
}

TEST_CASE("unseen-timestamp split: disjoint and fact counts conserved") {
  Rng rng(3);
  std::vector<RawFact> train;
  for (int day = 1; day <= 28; ++day) {
    for (int k = 0; k < 6; ++k) {
      train.push_back({testing::ename(k), "r", testing::ename((k + day) % 7), Date{2014, 1, day}});
    }
  }
  train.push_back({"loner", "r", "e1", Date{2014, 1, 15}});
  const auto ds = build_dataset(train, {}, {});
  const auto split = make_unseen_timestamp_split(ds, {5, 15, 25}, rng);
  const auto& out = split.dataset;
  CHECK(out.train.size() + out.valid.size() + out.test.size() + split.dropped == ds.num_facts());
  CHECK(split.dropped == 1);
  CHECK(shared_timestamp_count(out, Split::Train, Split::Test) == 0);
  CHECK(shared_timestamp_count(out, Split::Train, Split::Valid) == 0);
  CHECK(out.valid.size() == (out.valid.size() + out.test.size()) / 2);
  for (const auto& q : out.test) {
    const int d = out.vocab.timestamp(q.time).day;
    CHECK((d == 5 || d == 15 || d == 25));
  }
  CHECK(kind_of([&] { make_unseen_timestamp_split(ds, {}, rng); }) == ErrorKind::InvalidArgument);
  std::set<int> all_days;
  for (int d = 1; d <= 31; ++d) all_days.insert(d);
  CHECK(kind_of([&] { make_unseen_timestamp_split(ds, all_days, rng); }) == ErrorKind::DegenerateSplit);
}
