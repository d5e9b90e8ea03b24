#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qsync::tools {

/// Fixed 17 significant digits, locale independent.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);

  CsvWriter& add(double v);
  CsvWriter& add(const std::optional<double>& v);
  CsvWriter& add(long long v);
  CsvWriter& add(std::string_view v);
  void end_row();

  const std::string& str() const noexcept { return buf_; }
  std::size_t rows() const noexcept { return rows_; }

 private:
  void sep();
  std::string buf_;
  std::size_t columns_ = 0;
  std::size_t col_ = 0;
  std::size_t rows_ = 0;
};

/// Writes to a sibling temporary and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

/// Key/value run record with output checksums.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  /// Records the file's size and SHA-256 under its file name.
  void add_output(const std::filesystem::path& path, std::string_view content);
  void set_config(const std::string& text);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string config_;
};

std::string utc_timestamp();

}  // namespace qsync::tools
