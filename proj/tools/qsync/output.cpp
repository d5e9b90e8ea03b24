#include "output.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <qsync/errors.hpp>

namespace qsync::tools {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += header[i];
  }
  buf_ += '\n';
}

void CsvWriter::sep() {
  if (col_ >= columns_) throw Error(ErrorCode::InvalidArgument, "csv row has too many fields");
  if (col_) buf_ += ',';
  ++col_;
}

CsvWriter& CsvWriter::add(double v) {
  sep();
  buf_ += format_double(v);
  return *this;
}

CsvWriter& CsvWriter::add(const std::optional<double>& v) {
  sep();
  if (v) buf_ += format_double(*v);
  return *this;
}

CsvWriter& CsvWriter::add(long long v) {
  sep();
  buf_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::add(std::string_view v) {
  sep();
  buf_ += v;
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_) throw Error(ErrorCode::InvalidArgument, "csv row has too few fields");
  buf_ += '\n';
  col_ = 0;
  ++rows_;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Manifest::add_output(const std::filesystem::path& path, std::string_view content) {
  set("output." + path.filename().string(),
      "sha256=" + sha256_hex(content) + " bytes=" + std::to_string(content.size()));
}

void Manifest::set_config(const std::string& text) { config_ = text; }

std::string Manifest::str() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) {
    std::string flat = v;
    for (char& c : flat) {
      if (c == '\n') c = ' ';
    }
    out << k << ": " << flat << '\n';
  }
  out << "config: |\n";
  std::istringstream in(config_);
  for (std::string line; std::getline(in, line);) out << "  " << line << '\n';
  return out.str();
}

void Manifest::write(const std::filesystem::path& path) const { write_atomic(path, str()); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace qsync::tools
