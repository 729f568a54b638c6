#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bandit {

// Append-only record files: 4-byte big-endian payload length, then the
// payload bytes. A crash mid-append leaves a torn tail that scan_log detects
// and appenders truncate away on open.

struct LogScan {
  std::vector<std::string> records;
  uint64_t valid_bytes = 0;  // offset of the first torn byte, if any
  bool torn = false;
};

// Reads every complete record. A missing file scans as empty; unreadable
// files throw IoError.
LogScan scan_log(const std::string& path);

// scan_log without the bookkeeping; silently drops a torn tail.
std::vector<std::string> read_log(const std::string& path);

class RecordWriter {
 public:
  // Opens for append, creating parent directories. Recovers from a torn tail
  // by truncating to the last complete record. Not thread-safe; callers
  // serialize appends.
  explicit RecordWriter(const std::string& path, bool fsync_each = false);
  ~RecordWriter();

  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;

  void append(const std::string& payload);
  void flush();

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
  bool fsync_each_ = false;
};

}  // namespace bandit
