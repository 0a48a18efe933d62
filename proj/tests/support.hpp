#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mailweave/mailweave.hpp"

namespace mailweave::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(MAILWEAVE_FIXTURE_DIR) / name;
}

inline std::filesystem::path test_data(const std::string& name) {
  return std::filesystem::path(MAILWEAVE_TEST_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline nlohmann::json oracle() { return nlohmann::json::parse(slurp(test_data("corpus_oracle.json"))); }

/// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mailweave-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<EmailMessage> corpus_messages() {
  return clean_messages(parse_archive_file(fixture("corpus.mbox"), "xquery").messages).messages;
}

/// Corpus, registry and facts loaded the way the CLI does it.
inline void load_fixture(Warehouse& w, bool with_facts = true) {
  store_messages(w, parse_archive_file(fixture("corpus.mbox"), "xquery"));
  std::ifstream reg(fixture("registry.jsonl"));
  store_registry(w, read_registry(reg));
  if (with_facts) {
    std::ifstream facts(fixture("facts.jsonl"));
    apply_facts(w, facts);
  }
  resolve_warehouse(w, ResolutionRules::defaults());
}

inline Date d(int y, int m, int day) { return Date::from_ymd(y, m, day); }

}  // namespace mailweave::testing
