#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dekg/core_math.hpp"

namespace dekg {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using TimeId = std::int32_t;

/// Calendar date, or a bare integer timestamp stored as {0, 0, day}.
struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  auto operator<=>(const Date&) const = default;

  bool is_integer_stamp() const { return year == 0 && month == 0; }
  std::string to_string() const;
};

enum class TimeFormat { Auto, Iso, Integer };

bool is_valid_calendar_date(int year, int month, int day);
Date parse_date(std::string_view text, TimeFormat format = TimeFormat::Auto);
std::optional<TimeFormat> parse_time_format(std::string_view name);
std::string_view time_format_name(TimeFormat format);

/// One temporal fact. `time` indexes Vocabulary::timestamps().
struct Quadruple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;
  Date date;
  TimeId time = 0;

  bool operator==(const Quadruple&) const = default;
};

/// Dense name<->id maps for entities and relations, plus the sorted set of
/// distinct timestamps.
class Vocabulary {
 public:
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);
  /// Replaces the timestamp set; ids follow ascending date order.
  void set_timestamps(std::vector<Date> dates);

  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;
  std::optional<TimeId> find_timestamp(const Date& date) const;

  const std::string& entity_name(EntityId id) const;
  const std::string& relation_name(RelationId id) const;
  const Date& timestamp(TimeId id) const;

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_relations() const { return relation_names_.size(); }
  std::size_t num_timestamps() const { return timestamps_.size(); }
  const std::vector<Date>& timestamps() const { return timestamps_; }

 private:
  std::vector<std::string> entity_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::vector<Date> timestamps_;
};

enum class Split { Train, Valid, Test };
std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

struct Dataset {
  Vocabulary vocab;
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;

  const std::vector<Quadruple>& split(Split s) const;
  std::size_t num_facts() const { return train.size() + valid.size() + test.size(); }
};

struct RawFact {
  std::string head, relation, tail;
  Date date;
};

/// Parses one TSV file into name-level facts. Errors carry file:line.
std::vector<RawFact> read_fact_file(const std::filesystem::path& path,
                                    TimeFormat format = TimeFormat::Auto);

/// Builds a dataset from name-level splits; ids are assigned in first-appearance
/// order over train, then valid, then test.
Dataset build_dataset(const std::vector<RawFact>& train, const std::vector<RawFact>& valid,
                      const std::vector<RawFact>& test);

/// Loads train.txt / valid.txt / test.txt from a dataset directory.
Dataset load_tsv(const std::filesystem::path& dir, TimeFormat format = TimeFormat::Auto);

void write_fact_file(const std::filesystem::path& path, const Vocabulary& vocab,
                     std::span<const Quadruple> facts);
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// (year, month, day) as reals for the three temporal parameter groups.
std::array<double, 3> date_ordinal(const Date& date);

/// Known tails per (head, relation, time) and known heads per
/// (relation, tail, time), over every split of a dataset.
class FilterIndex {
 public:
  void add(const Quadruple& q);
  void finalize();

  /// Sorted, duplicate-free; empty span when the key is unknown.
  std::span<const EntityId> tails(EntityId head, RelationId relation, TimeId time) const;
  std::span<const EntityId> heads(RelationId relation, EntityId tail, TimeId time) const;

  bool has_tail(EntityId head, RelationId relation, TimeId time, EntityId tail) const;
  bool has_head(RelationId relation, EntityId tail, TimeId time, EntityId head) const;

 private:
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_;
};

FilterIndex build_filter_index(const Dataset& ds);
/// Index over an arbitrary fact list (e.g. train only, for negative filtering).
FilterIndex build_filter_index(std::span<const Quadruple> facts);

struct UnseenSplit {
  Dataset dataset;
  std::size_t dropped = 0;  // held-out facts removed for unseen entities
};

/// Pools every split, moves facts whose day-of-month is in `days` out of
/// train, drops held-out facts mentioning entities absent from the new train
/// split, and splits the rest 50/50 into validation and test.
UnseenSplit make_unseen_timestamp_split(const Dataset& ds, const std::set<int>& days, Rng& rng);

/// Number of distinct timestamps that occur in both splits.
std::size_t shared_timestamp_count(const Dataset& ds, Split a, Split b);

}  // namespace dekg
