#include "bandit/framing.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "bandit/errors.hpp"

namespace bandit {
namespace {

constexpr uint64_t kMaxRecordBytes = 1ull << 30;

uint32_t load_be32(const unsigned char* b) {
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void store_be32(uint32_t v, unsigned char* b) {
  b[0] = static_cast<unsigned char>(v >> 24);
  b[1] = static_cast<unsigned char>(v >> 16);
  b[2] = static_cast<unsigned char>(v >> 8);
  b[3] = static_cast<unsigned char>(v);
}

}  // namespace

LogScan scan_log(const std::string& path) {
  LogScan scan;
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) {
    if (errno == ENOENT) return scan;
    fail(Errc::IoError, "cannot open '" + path + "': " + std::strerror(errno));
  }
  unsigned char header[4];
  for (;;) {
    std::size_t got = std::fread(header, 1, 4, f);
    if (got == 0) break;
    if (got < 4) {
      scan.torn = true;
      break;
    }
    uint64_t len = load_be32(header);
    if (len > kMaxRecordBytes) {
      scan.torn = true;
      break;
    }
    std::string payload(len, '\0');
    if (len > 0 && std::fread(payload.data(), 1, len, f) < len) {
      scan.torn = true;
      break;
    }
    scan.records.push_back(std::move(payload));
    scan.valid_bytes += 4 + len;
  }
  std::fclose(f);
  return scan;
}

std::vector<std::string> read_log(const std::string& path) { return scan_log(path).records; }

RecordWriter::RecordWriter(const std::string& path, bool fsync_each)
    : path_(path), fsync_each_(fsync_each) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  LogScan scan = scan_log(path);
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT, 0644);
  if (fd_ < 0) fail(Errc::IoError, "cannot open '" + path + "': " + std::strerror(errno));
  if (scan.torn) {
    if (::ftruncate(fd_, static_cast<off_t>(scan.valid_bytes)) != 0) {
      fail(Errc::IoError, "cannot truncate torn tail of '" + path + "': " + std::strerror(errno));
    }
  }
  if (::lseek(fd_, 0, SEEK_END) < 0) {
    fail(Errc::IoError, "cannot seek '" + path + "': " + std::strerror(errno));
  }
}

RecordWriter::~RecordWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void RecordWriter::append(const std::string& payload) {
  if (payload.size() > kMaxRecordBytes) fail(Errc::IoError, "record exceeds 1 GiB");
  std::string frame(4 + payload.size(), '\0');
  store_be32(static_cast<uint32_t>(payload.size()),
             reinterpret_cast<unsigned char*>(frame.data()));
  std::memcpy(frame.data() + 4, payload.data(), payload.size());
  const char* data = frame.data();
  std::size_t left = frame.size();
  while (left > 0) {
    ssize_t wrote = ::write(fd_, data, left);
    if (wrote < 0) {
      if (errno == EINTR) continue;
      fail(Errc::IoError, "write to '" + path_ + "' failed: " + std::strerror(errno));
    }
    data += wrote;
    left -= static_cast<std::size_t>(wrote);
  }
  if (fsync_each_) flush();
}

void RecordWriter::flush() {
  if (::fsync(fd_) != 0) {
    fail(Errc::IoError, "fsync of '" + path_ + "' failed: " + std::strerror(errno));
  }
}

}  // namespace bandit
