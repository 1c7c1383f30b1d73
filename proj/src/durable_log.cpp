#include "agrotelem/durable_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "text_util.hpp"

namespace agrotelem {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno(what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::uint64_t file_size(int fd, const std::string& what) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) throw_errno(what);
  return static_cast<std::uint64_t>(st.st_size);
}

void fsync_dir(const std::filesystem::path& file) {
  auto dir = file.parent_path();
  if (dir.empty()) dir = ".";
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string format_log_record(const LogRecord& r) {
  return std::to_string(r.seq) + ',' + to_canonical_line(r.sample);
}

std::optional<LogRecord> parse_log_record(std::string_view line) {
  const auto comma = line.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto seq = detail::parse_int<std::uint16_t>(line.substr(0, comma));
  auto sample = parse_canonical_line(line.substr(comma + 1));
  if (!seq || !sample) return std::nullopt;
  return LogRecord{*seq, *sample};
}

DurableLog::DurableLog(std::filesystem::path path, bool sync) : path_(std::move(path)), sync_(sync) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw_errno("open " + path_.string());

  std::uint64_t size = file_size(fd_, path_.string());
  if (size > 0) {
    // Find the last '\n'; anything after it is a torn append.
    std::uint64_t keep = size;
    char buf[4096];
    bool found = false;
    while (keep > 0 && !found) {
      const std::uint64_t chunk = std::min<std::uint64_t>(keep, sizeof buf);
      const ssize_t n = ::pread(fd_, buf, chunk, static_cast<off_t>(keep - chunk));
      if (n != static_cast<ssize_t>(chunk)) throw_errno("read " + path_.string());
      for (std::uint64_t i = chunk; i > 0; --i) {
        if (buf[i - 1] == '\n') {
          keep = keep - chunk + i;
          found = true;
          break;
        }
      }
      if (!found) keep -= chunk;
    }
    if (keep != size) {
      if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0) throw_errno("truncate " + path_.string());
      truncated_ = size - keep;
      size = keep;
    }
  }
  committed_.store(size, std::memory_order_release);
}

DurableLog::~DurableLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint64_t DurableLog::append(std::span<const LogRecord> records) {
  std::string text;
  for (const auto& r : records) {
    text += format_log_record(r);
    text += '\n';
  }
  std::lock_guard lock(append_mu_);
  write_all(fd_, text, "append " + path_.string());
  if (sync_ && ::fdatasync(fd_) != 0) throw_errno("fsync " + path_.string());
  const auto size = committed_.load(std::memory_order_relaxed) + text.size();
  committed_.store(size, std::memory_order_release);
  return size;
}

DurableLog::Chunk DurableLog::read_from(std::uint64_t offset, std::size_t max_records) const {
  Chunk chunk;
  chunk.end = offset;
  const std::uint64_t limit = size();
  if (offset >= limit || max_records == 0) return chunk;

  std::ifstream in(path_, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path_.string());
  in.seekg(static_cast<std::streamoff>(offset));
  std::string line;
  std::uint64_t pos = offset;
  while (chunk.records.size() < max_records && pos < limit && std::getline(in, line)) {
    pos += line.size() + 1;
    if (pos > limit) break;  // never happens for committed bytes; guards a racing reader
    chunk.end = pos;
    if (auto rec = parse_log_record(line)) {
      chunk.records.push_back(*rec);
    } else {
      ++chunk.skipped;
    }
    chunk.last_line = line;
  }
  return chunk;
}

std::optional<std::string> DurableLog::line_ending_at(std::uint64_t offset) const {
  if (offset == 0) return std::string{};
  if (offset > size()) return std::nullopt;
  constexpr std::uint64_t kWindow = 1024;  // records are well under 100 bytes
  const std::uint64_t start = offset > kWindow ? offset - kWindow : 0;
  std::string buf(offset - start, '\0');
  const ssize_t n = ::pread(fd_, buf.data(), buf.size(), static_cast<off_t>(start));
  if (n != static_cast<ssize_t>(buf.size()) || buf.back() != '\n') return std::nullopt;
  buf.pop_back();
  const auto prev = buf.rfind('\n');
  if (prev == std::string::npos) {
    if (start != 0) return std::nullopt;
    return buf;
  }
  return buf.substr(prev + 1);
}

CursorStore::CursorStore(std::filesystem::path path, bool sync)
    : path_(std::move(path)), sync_(sync) {}

std::optional<UploadCursor> CursorStore::load() const {
  std::ifstream in(path_);
  if (!in) {
    if (!std::filesystem::exists(path_)) return std::nullopt;
    throw CorruptCursor("cannot read cursor file " + path_.string());
  }
  std::string line;
  std::getline(in, line);
  std::string rest;
  in >> rest;
  const auto fields = detail::split(detail::trim(line), ',');
  if (fields.size() != 2 || fields[1].size() != 4 || !rest.empty()) {
    throw CorruptCursor("malformed cursor file " + path_.string());
  }
  auto offset = detail::parse_int<std::uint64_t>(fields[0]);
  auto checksum = detail::parse_int<std::uint16_t>(fields[1], 16);
  if (!offset || !checksum) throw CorruptCursor("malformed cursor file " + path_.string());
  return UploadCursor{*offset, *checksum};
}

void CursorStore::save(const UploadCursor& c) const {
  char text[48];
  const int len = std::snprintf(text, sizeof text, "%llu,%04x\n",
                                static_cast<unsigned long long>(c.offset), c.tail_checksum);
  auto tmp = path_;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + tmp.string());
  try {
    write_all(fd, std::string_view(text, static_cast<std::size_t>(len)), "write " + tmp.string());
    if (sync_ && ::fsync(fd) != 0) throw_errno("fsync " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), path_.c_str()) != 0) throw_errno("rename " + tmp.string());
  if (sync_) fsync_dir(path_);
}

}  // namespace agrotelem
