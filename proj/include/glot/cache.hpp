#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "glot/error.hpp"
#include "glot/matrix.hpp"

namespace glot {

// GEC1 layout, all integers and floats little-endian:
//   "GEC1" | version u32 | d u32 | sentence_count u64
//   per sentence: length u32 | length*d float32
//   FNV-1a 64 checksum (u64) over the per-sentence records

inline constexpr std::uint32_t kCacheVersion = 1;

class CacheBadMagic : public DataError {
 public:
  using DataError::DataError;
};
class CacheChecksumMismatch : public DataError {
 public:
  using DataError::DataError;
};
class CacheTruncated : public DataError {
 public:
  using DataError::DataError;
};

struct EmbeddingCache {
  std::uint32_t version = kCacheVersion;
  std::uint32_t dim = 0;
  std::vector<Matrix> sentences;
};

/// Sentences must share a column count and have at least one row.
/// Values are narrowed to float32 on disk.
void write_cache(std::span<const Matrix> sentences, const std::filesystem::path& path);

/// Whole-file read, built on CacheReader.
EmbeddingCache read_cache(const std::filesystem::path& path);

/// Streams sentences one at a time. The checksum is verified when the last
/// sentence has been consumed; next() throws CacheChecksumMismatch then.
class CacheReader {
 public:
  explicit CacheReader(const std::filesystem::path& path);

  std::uint32_t version() const noexcept { return version_; }
  std::uint32_t dim() const noexcept { return dim_; }
  std::uint64_t sentence_count() const noexcept { return count_; }

  /// Reads the next sentence into `out`; false once all are read.
  bool next(Matrix& out);

 private:
  void read_exact(void* dst, std::size_t n, const char* what);

  std::ifstream in_;
  std::uint32_t version_ = 0;
  std::uint32_t dim_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
  std::uint64_t file_size_ = 0;
  std::uint64_t hash_;
  bool verified_ = false;
};

/// FNV-1a 64 over a byte range, continuing from `seed`.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
/// FNV-1a 64 of a whole file, used for manifest digests.
std::uint64_t file_digest(const std::filesystem::path& path);

}  // namespace glot
