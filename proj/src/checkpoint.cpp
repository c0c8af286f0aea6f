#include "dekg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dekg/config.hpp"
#include "dekg/error.hpp"

namespace dekg {

namespace {

constexpr char kMagic[8] = {'D', 'E', 'K', 'G', 'C', 'K', 'P', 'T'};

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  void item(std::string_view s) {
    bytes(s);
    bytes(std::string_view("\0", 1));
  }
};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  out.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> b;
  in.read(reinterpret_cast<char*>(b.data()), sizeof(T));
  if (!in) throw Error(ErrorKind::Checkpoint, "checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T value;
  std::memcpy(&value, b.data(), sizeof(T));
  return value;
}

}  // namespace

VocabHashes vocab_hashes(const Vocabulary& vocab) {
  Fnv e, r, t;
  for (std::size_t i = 0; i < vocab.num_entities(); ++i) e.item(vocab.entity_name(static_cast<EntityId>(i)));
  for (std::size_t i = 0; i < vocab.num_relations(); ++i) r.item(vocab.relation_name(static_cast<RelationId>(i)));
  for (const auto& d : vocab.timestamps()) t.item(d.to_string());
  return {e.h, r.h, t.h};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  using nlohmann::json;
  const auto& p = ckpt.params;
  json header;
  header["config"] = serialize_config(ckpt.config);
  header["model"] = std::string(model_kind_name(p.config().kind));
  header["num_entities"] = p.num_entities();
  header["num_relations"] = p.num_relations();
  header["num_timestamps"] = p.num_timestamps();
  header["vocab_hash"] = {{"entities", ckpt.hashes.entities},
                          {"relations", ckpt.hashes.relations},
                          {"timestamps", ckpt.hashes.timestamps}};
  header["best_epoch"] = ckpt.best_epoch;
  header["best_val_mrr"] = std::isnan(ckpt.best_val_mrr) ? json(nullptr) : json(ckpt.best_val_mrr);
  header["time_encoder"] = {{"normalize", p.time_encoder.normalize},
                            {"lo", p.time_encoder.lo},
                            {"hi", p.time_encoder.hi}};
  json tables = json::array();
  for (const auto& t : p.tables()) tables.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  header["tables"] = tables;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : p.tables()) {
    put_le<std::uint64_t>(out, t.data.size());
    for (double x : t.data) put_le<double>(out, x);
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary* expected) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::Checkpoint, path.string() + " is not a checkpoint");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::Checkpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = get_le<std::uint64_t>(in);
  if (len > (1ULL << 30)) throw Error(ErrorKind::Checkpoint, "checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(ErrorKind::Checkpoint, "checkpoint is truncated");

  Checkpoint ck;
  try {
    const json h = json::parse(text);
    ck.config = parse_config(h.at("config").get<std::string>());
    ck.hashes = {h.at("vocab_hash").at("entities").get<std::uint64_t>(),
                 h.at("vocab_hash").at("relations").get<std::uint64_t>(),
                 h.at("vocab_hash").at("timestamps").get<std::uint64_t>()};
    ck.best_epoch = h.at("best_epoch").get<int>();
    ck.best_val_mrr = h.at("best_val_mrr").is_null() ? std::nan("") : h.at("best_val_mrr").get<double>();
    ck.params = ModelParams(ck.config.model, h.at("num_entities").get<std::size_t>(),
                            h.at("num_relations").get<std::size_t>(),
                            h.at("num_timestamps").get<std::size_t>());
    const auto& enc = h.at("time_encoder");
    ck.params.time_encoder.normalize = enc.at("normalize").get<bool>();
    ck.params.time_encoder.lo = enc.at("lo").get<std::array<double, 3>>();
    ck.params.time_encoder.hi = enc.at("hi").get<std::array<double, 3>>();
    const auto& tables = h.at("tables");
    if (tables.size() != ck.params.tables().size()) {
      throw Error(ErrorKind::Checkpoint, "checkpoint table count does not match its model");
    }
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const auto& t = ck.params.tables()[i];
      if (tables[i].at("name").get<std::string>() != t.name ||
          tables[i].at("rows").get<std::size_t>() != t.rows ||
          tables[i].at("cols").get<std::size_t>() != t.cols) {
        throw Error(ErrorKind::Checkpoint, "checkpoint table '" + t.name + "' has the wrong shape");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Checkpoint, std::string("malformed checkpoint header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Checkpoint) throw;
    throw Error(ErrorKind::Checkpoint, std::string("invalid checkpoint: ") + e.what());
  }

  if (expected != nullptr && vocab_hashes(*expected) != ck.hashes) {
    throw Error(ErrorKind::Checkpoint, "checkpoint vocabulary does not match the dataset");
  }
  for (auto& t : ck.params.tables()) {
    const auto n = get_le<std::uint64_t>(in);
    if (n != t.data.size()) throw Error(ErrorKind::Checkpoint, "table '" + t.name + "' has the wrong length");
    for (auto& x : t.data) x = get_le<double>(in);
  }
  in.peek();
  if (!in.eof()) throw Error(ErrorKind::Checkpoint, "trailing bytes after checkpoint tables");
  return ck;
}

}  // namespace dekg
