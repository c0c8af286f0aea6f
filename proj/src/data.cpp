#include "dekg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dekg/error.hpp"

namespace dekg {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

constexpr std::uint64_t kEntityBits = 24;
constexpr std::uint64_t kRelationBits = 16;
constexpr std::uint64_t kTimeBits = 24;

std::uint64_t pack_key(std::int64_t entity, std::int64_t relation, std::int64_t time) {
  if (entity < 0 || relation < 0 || time < 0 ||
      static_cast<std::uint64_t>(entity) >= (1ULL << kEntityBits) ||
      static_cast<std::uint64_t>(relation) >= (1ULL << kRelationBits) ||
      static_cast<std::uint64_t>(time) >= (1ULL << kTimeBits)) {
    throw Error(ErrorKind::Index, "filter index key out of range");
  }
  return (static_cast<std::uint64_t>(entity) << (kRelationBits + kTimeBits)) |
         (static_cast<std::uint64_t>(relation) << kTimeBits) |
         static_cast<std::uint64_t>(time);
}

std::span<const EntityId> lookup(const std::unordered_map<std::uint64_t, std::vector<EntityId>>& map,
                                 std::uint64_t key) {
  auto it = map.find(key);
  if (it == map.end()) return {};
  return it->second;
}

}  // namespace

std::string Date::to_string() const {
  if (is_integer_stamp()) return std::to_string(day);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

bool is_valid_calendar_date(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int limit = kDays[month - 1];
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  if (month == 2 && leap) limit = 29;
  return day <= limit;
}

Date parse_date(std::string_view text, TimeFormat format) {
  const bool looks_integer = all_digits(text);
  if (format == TimeFormat::Integer || (format == TimeFormat::Auto && looks_integer)) {
    int stamp = 0;
    if (!parse_int(text, stamp) || stamp < 0) {
      throw Error(ErrorKind::Parse, "bad integer timestamp '" + std::string(text) + "'");
    }
    return Date{0, 0, stamp};
  }
  // YYYY-MM-DD
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorKind::Parse, "unknown date format '" + std::string(text) + "'");
  }
  Date d;
  if (!all_digits(text.substr(0, 4)) || !all_digits(text.substr(5, 2)) ||
      !all_digits(text.substr(8, 2)) || !parse_int(text.substr(0, 4), d.year) ||
      !parse_int(text.substr(5, 2), d.month) || !parse_int(text.substr(8, 2), d.day)) {
    throw Error(ErrorKind::Parse, "unknown date format '" + std::string(text) + "'");
  }
  if (!is_valid_calendar_date(d.year, d.month, d.day)) {
    throw Error(ErrorKind::Parse, "invalid calendar date '" + std::string(text) + "'");
  }
  return d;
}

std::optional<TimeFormat> parse_time_format(std::string_view name) {
  if (name == "auto") return TimeFormat::Auto;
  if (name == "iso") return TimeFormat::Iso;
  if (name == "integer") return TimeFormat::Integer;
  return std::nullopt;
}

std::string_view time_format_name(TimeFormat format) {
  switch (format) {
    case TimeFormat::Auto: return "auto";
    case TimeFormat::Iso: return "iso";
    case TimeFormat::Integer: return "integer";
  }
  return "auto";
}

EntityId Vocabulary::add_entity(std::string_view name) {
  auto [it, inserted] =
      entity_ids_.try_emplace(std::string(name), static_cast<EntityId>(entity_names_.size()));
  if (inserted) entity_names_.emplace_back(name);
  return it->second;
}

RelationId Vocabulary::add_relation(std::string_view name) {
  auto [it, inserted] =
      relation_ids_.try_emplace(std::string(name), static_cast<RelationId>(relation_names_.size()));
  if (inserted) relation_names_.emplace_back(name);
  return it->second;
}

void Vocabulary::set_timestamps(std::vector<Date> dates) {
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  timestamps_ = std::move(dates);
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<TimeId> Vocabulary::find_timestamp(const Date& date) const {
  auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), date);
  if (it == timestamps_.end() || *it != date) return std::nullopt;
  return static_cast<TimeId>(it - timestamps_.begin());
}

const std::string& Vocabulary::entity_name(EntityId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entity_names_.size()) {
    throw Error(ErrorKind::Index, "entity id " + std::to_string(id) + " out of range");
  }
  return entity_names_[static_cast<std::size_t>(id)];
}

const std::string& Vocabulary::relation_name(RelationId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= relation_names_.size()) {
    throw Error(ErrorKind::Index, "relation id " + std::to_string(id) + " out of range");
  }
  return relation_names_[static_cast<std::size_t>(id)];
}

const Date& Vocabulary::timestamp(TimeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= timestamps_.size()) {
    throw Error(ErrorKind::Index, "timestamp id " + std::to_string(id) + " out of range");
  }
  return timestamps_[static_cast<std::size_t>(id)];
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "test";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "valid" || name == "validation") return Split::Valid;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

const std::vector<Quadruple>& Dataset::split(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Valid: return valid;
    case Split::Test: return test;
  }
  return test;
}

std::vector<RawFact> read_fact_file(const std::filesystem::path& path, TimeFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<RawFact> facts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::size_t count = 0;
    std::string_view rest = line;
    while (true) {
      const auto tab = rest.find('\t');
      if (count == fields.size()) {
        count = fields.size() + 1;
        break;
      }
      fields[count++] = rest.substr(0, tab);
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (count != 4) {
      throw Error(ErrorKind::Parse, where + ": expected 4 tab-separated columns");
    }
    for (const auto& f : fields) {
      if (f.empty()) throw Error(ErrorKind::Parse, where + ": empty column");
    }
    RawFact fact;
    fact.head = fields[0];
    fact.relation = fields[1];
    fact.tail = fields[2];
    try {
      fact.date = parse_date(fields[3], format);
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, where + ": " + e.what());
    }
    facts.push_back(std::move(fact));
  }
  return facts;
}

Dataset build_dataset(const std::vector<RawFact>& train, const std::vector<RawFact>& valid,
                      const std::vector<RawFact>& test) {
  Dataset ds;
  std::vector<Date> dates;
  auto convert = [&](const std::vector<RawFact>& raw, std::vector<Quadruple>& out) {
    out.reserve(raw.size());
    for (const auto& f : raw) {
      Quadruple q;
      q.head = ds.vocab.add_entity(f.head);
      q.relation = ds.vocab.add_relation(f.relation);
      q.tail = ds.vocab.add_entity(f.tail);
      q.date = f.date;
      dates.push_back(f.date);
      out.push_back(q);
    }
  };
  convert(train, ds.train);
  convert(valid, ds.valid);
  convert(test, ds.test);
  ds.vocab.set_timestamps(std::move(dates));
  for (auto* split : {&ds.train, &ds.valid, &ds.test}) {
    for (auto& q : *split) q.time = *ds.vocab.find_timestamp(q.date);
  }
  return ds;
}

Dataset load_tsv(const std::filesystem::path& dir, TimeFormat format) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::Io, "dataset directory not found: " + dir.string());
  }
  return build_dataset(read_fact_file(dir / "train.txt", format),
                       read_fact_file(dir / "valid.txt", format),
                       read_fact_file(dir / "test.txt", format));
}

void write_fact_file(const std::filesystem::path& path, const Vocabulary& vocab,
                     std::span<const Quadruple> facts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& q : facts) {
    out << vocab.entity_name(q.head) << '\t' << vocab.relation_name(q.relation) << '\t'
        << vocab.entity_name(q.tail) << '\t' << q.date.to_string() << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_fact_file(dir / "train.txt", ds.vocab, ds.train);
  write_fact_file(dir / "valid.txt", ds.vocab, ds.valid);
  write_fact_file(dir / "test.txt", ds.vocab, ds.test);
}

std::array<double, 3> date_ordinal(const Date& date) {
  return {static_cast<double>(date.year), static_cast<double>(date.month),
          static_cast<double>(date.day)};
}

void FilterIndex::add(const Quadruple& q) {
  tails_[pack_key(q.head, q.relation, q.time)].push_back(q.tail);
  heads_[pack_key(q.tail, q.relation, q.time)].push_back(q.head);
}

void FilterIndex::finalize() {
  for (auto* map : {&tails_, &heads_}) {
    for (auto& [key, ids] : *map) {
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
  }
}

std::span<const EntityId> FilterIndex::tails(EntityId head, RelationId relation, TimeId time) const {
  return lookup(tails_, pack_key(head, relation, time));
}

std::span<const EntityId> FilterIndex::heads(RelationId relation, EntityId tail, TimeId time) const {
  return lookup(heads_, pack_key(tail, relation, time));
}

bool FilterIndex::has_tail(EntityId head, RelationId relation, TimeId time, EntityId tail) const {
  auto ids = tails(head, relation, time);
  return std::binary_search(ids.begin(), ids.end(), tail);
}

bool FilterIndex::has_head(RelationId relation, EntityId tail, TimeId time, EntityId head) const {
  auto ids = heads(relation, tail, time);
  return std::binary_search(ids.begin(), ids.end(), head);
}

FilterIndex build_filter_index(std::span<const Quadruple> facts) {
  FilterIndex index;
  for (const auto& q : facts) index.add(q);
  index.finalize();
  return index;
}

FilterIndex build_filter_index(const Dataset& ds) {
  FilterIndex index;
  for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
    for (const auto& q : *split) index.add(q);
  }
  index.finalize();
  return index;
}

UnseenSplit make_unseen_timestamp_split(const Dataset& ds, const std::set<int>& days, Rng& rng) {
  if (days.empty()) throw Error(ErrorKind::InvalidArgument, "unseen split: day set is empty");

  auto to_raw = [&](const Quadruple& q) {
    return RawFact{ds.vocab.entity_name(q.head), ds.vocab.relation_name(q.relation),
                   ds.vocab.entity_name(q.tail), q.date};
  };

  std::vector<RawFact> train;
  std::vector<RawFact> held;
  std::vector<bool> seen(ds.vocab.num_entities(), false);
  for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
    for (const auto& q : *split) {
      if (days.count(q.date.day)) {
        held.push_back(to_raw(q));
      } else {
        train.push_back(to_raw(q));
        seen[static_cast<std::size_t>(q.head)] = true;
        seen[static_cast<std::size_t>(q.tail)] = true;
      }
    }
  }
  if (train.empty()) {
    throw Error(ErrorKind::DegenerateSplit, "unseen split: no facts left in train");
  }

  std::vector<RawFact> kept;
  for (auto& f : held) {
    const auto h = *ds.vocab.find_entity(f.head);
    const auto t = *ds.vocab.find_entity(f.tail);
    if (seen[static_cast<std::size_t>(h)] && seen[static_cast<std::size_t>(t)]) {
      kept.push_back(std::move(f));
    }
  }
  UnseenSplit result;
  result.dropped = held.size() - kept.size();

  for (std::size_t i = kept.size(); i > 1; --i) {
    std::swap(kept[i - 1], kept[rng.below(i)]);
  }
  const std::size_t half = kept.size() / 2;
  std::vector<RawFact> valid(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<RawFact> test(kept.begin() + static_cast<std::ptrdiff_t>(half), kept.end());
  result.dataset = build_dataset(train, valid, test);
  return result;
}

std::size_t shared_timestamp_count(const Dataset& ds, Split a, Split b) {
  std::set<Date> first;
  for (const auto& q : ds.split(a)) first.insert(q.date);
  std::set<Date> shared;
  for (const auto& q : ds.split(b)) {
    if (first.count(q.date)) shared.insert(q.date);
  }
  return shared.size();
}

}  // namespace dekg
