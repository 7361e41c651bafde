#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isoforge::io {

/// Little-endian byte sink used by all three binary formats.
class ByteWriter {
 public:
  void bytes(std::string_view raw) { buffer_.append(raw); }
  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);

  const std::string& buffer() const noexcept { return buffer_; }
  std::string release() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

/// Little-endian cursor over an in-memory file. Every read past the end
/// throws TruncationError naming `what`.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n, std::string_view what);
  std::uint8_t u8(std::string_view what);
  std::uint32_t u32(std::string_view what);
  std::uint64_t u64(std::string_view what);
  float f32(std::string_view what);
  double f64(std::string_view what);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void require(std::size_t n, std::string_view what) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes every (path, contents) pair to a sibling temp file, then renames
/// all of them into place. On failure no target is touched and temps are
/// removed.
void atomic_write(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace isoforge::io
