#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrotelem/domain.hpp"

namespace agrotelem {

// One line of the gateway log: `seq,ISO8601Z,station,kind,value`.
struct LogRecord {
  std::uint16_t seq = 0;
  Sample sample;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

std::string format_log_record(const LogRecord& r);
std::optional<LogRecord> parse_log_record(std::string_view line);

// Append-only newline-delimited log. Appends are serialized; readers only see
// bytes below the committed size, so a concurrent reader never observes a
// half-written line.
class DurableLog {
 public:
  // Opens or creates the file. A trailing line without '\n' (torn write) is
  // truncated away.
  DurableLog(std::filesystem::path path, bool sync);
  ~DurableLog();

  DurableLog(const DurableLog&) = delete;
  DurableLog& operator=(const DurableLog&) = delete;

  // Writes all records as one write(2) and fsyncs when enabled. Returns the
  // new committed size. Throws std::system_error.
  std::uint64_t append(std::span<const LogRecord> records);

  std::uint64_t size() const { return committed_.load(std::memory_order_acquire); }
  std::uint64_t truncated_on_open() const { return truncated_; }
  const std::filesystem::path& path() const { return path_; }

  struct Chunk {
    std::vector<LogRecord> records;
    std::uint64_t end = 0;       // offset just past the last consumed line
    std::string last_line;       // that line, without '\n'
    std::size_t skipped = 0;     // unparseable lines consumed
  };

  // Up to `max_records` parsed records starting at `offset` (a line boundary).
  Chunk read_from(std::uint64_t offset, std::size_t max_records) const;

  // The complete line that ends exactly at `offset`, or nullopt if `offset` is
  // not a line boundary. Offset 0 yields the empty string.
  std::optional<std::string> line_ending_at(std::uint64_t offset) const;

 private:
  std::filesystem::path path_;
  bool sync_;
  int fd_ = -1;
  std::mutex append_mu_;
  std::atomic<std::uint64_t> committed_{0};
  std::uint64_t truncated_ = 0;
};

// Bookmark of the first record the platform has not acknowledged.
struct UploadCursor {
  std::uint64_t offset = 0;
  std::uint16_t tail_checksum = 0xFFFF;  // crc16 of the line ending at offset

  friend bool operator==(const UploadCursor&, const UploadCursor&) = default;
};

class CorruptCursor : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-line file `offset,tail_checksum` (checksum as 4 hex digits).
class CursorStore {
 public:
  CursorStore(std::filesystem::path path, bool sync);

  // nullopt if the file does not exist. Throws CorruptCursor on a bad format.
  std::optional<UploadCursor> load() const;
  // Write-temp-then-rename.
  void save(const UploadCursor& c) const;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  bool sync_;
};

}  // namespace agrotelem
