#pragma once

// Little-endian binary container helpers shared by the model checkpoint and
// dataset export formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "csc/errors.hpp"

namespace csc::io {

inline constexpr char kMagic[4] = {'C', 'S', 'C', '1'};
inline constexpr std::uint32_t kVersion = 1;

enum class ContainerKind : std::uint32_t { model = 1, dataset = 2 };

static_assert(std::endian::native == std::endian::little,
              "container writer assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  template <class T>
  void blob(std::span<const T> v) {
    u64(v.size());
    bytes(v.data(), v.size() * sizeof(T));
  }
  void header(ContainerKind kind) {
    bytes(kMagic, 4);
    u32(kVersion);
    u32(static_cast<std::uint32_t>(kind));
  }
  const std::vector<char>& buffer() const { return buf_; }

  void write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw DataError("short write to " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}

  static Reader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Reader(std::move(buf));
  }

  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw FormatError("container truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  float f32() { float v; bytes(&v, 4); return v; }
  std::string str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  template <class T>
  std::vector<T> blob() {
    const std::uint64_t n = u64();
    if (n > (buf_.size() - pos_) / sizeof(T)) throw FormatError("container blob truncated");
    std::vector<T> v(n);
    bytes(v.data(), n * sizeof(T));
    return v;
  }
  void header(ContainerKind expected) {
    char magic[4];
    bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad container magic");
    const std::uint32_t version = u32();
    if (version != kVersion) throw FormatError("unsupported container version " + std::to_string(version));
    const std::uint32_t kind = u32();
    if (kind != static_cast<std::uint32_t>(expected)) throw FormatError("unexpected container kind");
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace csc::io
