#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mailweave/error.hpp"
#include "mailweave/record_xml.hpp"
#include "mailweave/temporal.hpp"

namespace mailweave {

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// File name for a record id: [A-Za-z0-9._@+=-] kept, everything else %XX.
/// Long names are cut and suffixed with a hash of the id.
inline std::string file_stem(std::string_view id) {
  std::string out;
  for (std::size_t i = 0; i < id.size(); ++i) {
    const auto c = static_cast<unsigned char>(id[i]);
    const bool keep = std::isalnum(c) || c == '_' || c == '@' || c == '+' || c == '=' ||
                      c == '-' || (c == '.' && i > 0);
    if (keep) {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  if (out.size() > 160) out = out.substr(0, 140) + "~" + hex64(fnv1a64(id));
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + p.string());
  return ss.str();
}

/// Writes to a temporary sibling and renames it over `p`.
inline void write_file_atomic(const std::filesystem::path& p, std::string_view content) {
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + tmp);
  }
  std::filesystem::rename(tmp, p, ec);
  if (ec) throw IoError("cannot replace " + p.string() + ": " + ec.message());
}

}  // namespace detail

/// Keyed record storage, in memory or backed by a directory:
///
///   ROOT/{schema}/{record-id}.xml   one document per record
///   ROOT/index                      "schema TAB id TAB path TAB fnv1a64" lines
///
/// Record files are written first and the index last, each by
/// write-then-rename, so a reader opening the warehouse sees either the old
/// or the new version of every record. One writer at a time.
class Warehouse {
 public:
  using Key = std::pair<Schema, std::string>;

  Warehouse() = default;

  /// Opens (creating if needed) a directory-backed warehouse and loads it.
  static Warehouse open(const std::filesystem::path& root) {
    Warehouse w;
    w.root_ = root;
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (!std::filesystem::is_directory(root)) {
      throw IoError("warehouse path is not a directory: " + root.string());
    }
    const auto index = root / "index";
    if (!std::filesystem::exists(index)) return w;
    std::istringstream lines(detail::read_file(index));
    std::string line;
    std::size_t number = 0;
    while (std::getline(lines, line)) {
      ++number;
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string> cols;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
          cols.push_back(line.substr(start, i - start));
          start = i + 1;
        }
      }
      const auto schema = cols.size() == 4 ? parse_schema(cols[0]) : std::nullopt;
      if (!schema) throw IoError("corrupt index line " + std::to_string(number));
      const std::string doc = detail::read_file(root / cols[2]);
      if (detail::hex64(detail::fnv1a64(doc)) != cols[3]) {
        throw IoError("checksum mismatch for " + cols[2]);
      }
      Record r = parse_record(doc);
      if (r.schema != *schema || r.record_id != cols[1]) {
        throw IoError("index entry does not match " + cols[2]);
      }
      w.paths_[{r.schema, r.record_id}] = cols[2];
      w.hashes_[{r.schema, r.record_id}] = cols[3];
      w.records_.emplace(Key{r.schema, r.record_id}, std::move(r));
    }
    return w;
  }

  bool persistent() const noexcept { return root_.has_value(); }
  const std::optional<std::filesystem::path>& root() const noexcept { return root_; }

  void put_record(Record record) {
    std::vector<Record> one;
    one.push_back(std::move(record));
    put_records(std::move(one));
  }

  /// Validates every record first; nothing is stored if one is invalid.
  void put_records(std::vector<Record> records) {
    for (const auto& r : records) validate_record(r);
    for (auto& r : records) {
      Key key{r.schema, r.record_id};
      if (root_) {
        const std::string rel = std::string(to_string(r.schema)) + "/" + detail::file_stem(r.record_id) + ".xml";
        const std::string doc = serialize_record(r);
        detail::write_file_atomic(*root_ / rel, doc);
        paths_[key] = rel;
        hashes_[key] = detail::hex64(detail::fnv1a64(doc));
      }
      records_.insert_or_assign(std::move(key), std::move(r));
    }
    if (root_) write_index();
  }

  void remove_records(const std::vector<Key>& keys) {
    std::vector<std::string> doomed;
    for (const auto& key : keys) {
      if (records_.erase(key) && root_) {
        doomed.push_back(paths_[key]);
        paths_.erase(key);
        hashes_.erase(key);
      }
    }
    if (!root_) return;
    write_index();
    for (const auto& rel : doomed) {
      std::error_code ec;
      std::filesystem::remove(*root_ / rel, ec);
    }
  }

  const Record* find_record(Schema schema, std::string_view id) const {
    auto it = records_.find(Key{schema, std::string(id)});
    return it == records_.end() ? nullptr : &it->second;
  }

  /// Throws NotFoundError.
  const Record& get_record(Schema schema, std::string_view id) const {
    if (const Record* r = find_record(schema, id)) return *r;
    throw NotFoundError("no " + std::string(to_string(schema)) + " record '" + std::string(id) + "'");
  }

  /// Records ordered by (schema, id).
  std::vector<const Record*> list_records(std::optional<Schema> filter = std::nullopt) const {
    std::vector<const Record*> out;
    for (const auto& [key, r] : records_) {
      if (!filter || key.first == *filter) out.push_back(&r);
    }
    return out;
  }

  std::size_t size() const noexcept { return records_.size(); }

  std::string assert_fact(Schema schema, std::string_view id, const Assertion& a) {
    Record r = get_record(schema, id);
    std::string ann = mailweave::assert_fact(r, a);
    put_record(std::move(r));
    return ann;
  }

  std::string retract_fact(Schema schema, std::string_view id, std::string_view field,
                           std::string_view target, const TemporalBound& corrected_end,
                           Date asserted_at) {
    Record r = get_record(schema, id);
    std::string ann = mailweave::retract_fact(r, field, target, corrected_end, asserted_at);
    put_record(std::move(r));
    return ann;
  }

  SnapshotView snapshot_asof(Schema schema, std::string_view id, Date valid,
                             std::optional<Date> tx = std::nullopt) const {
    return mailweave::snapshot_asof(get_record(schema, id), valid, tx);
  }

 private:
  void write_index() {
    std::string out = "# mailweave warehouse index v1\n";
    for (const auto& [key, r] : records_) {
      auto h = hashes_.find(key);
      if (h == hashes_.end()) {
        h = hashes_.emplace(key, detail::hex64(detail::fnv1a64(serialize_record(r)))).first;
      }
      out += std::string(to_string(key.first)) + "\t" + key.second + "\t" + paths_.at(key) + "\t" +
             h->second + "\n";
    }
    detail::write_file_atomic(*root_ / "index", out);
  }

  std::optional<std::filesystem::path> root_;
  std::map<Key, Record> records_;
  std::map<Key, std::string> paths_;
  std::map<Key, std::string> hashes_;
};

}  // namespace mailweave
