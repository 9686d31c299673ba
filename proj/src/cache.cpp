#include "glot/cache.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace glot {

namespace {

constexpr std::array<unsigned char, 4> kMagic = {0x47, 0x45, 0x43, 0x31};  // "GEC1"

template <class T>
void put_le(std::vector<unsigned char>& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_f32(std::vector<unsigned char>& buf, double v) {
  put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for digest");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    h = fnv1a64({reinterpret_cast<const unsigned char*>(buf.data()), got}, h);
  }
  return h;
}

void write_cache(std::span<const Matrix> sentences, const std::filesystem::path& path) {
  if (sentences.empty()) throw InvalidArgument("write_cache: no sentences");
  const std::size_t d = sentences.front().cols();
  if (d == 0) throw InvalidArgument("write_cache: d must be >= 1");
  for (const Matrix& s : sentences) {
    if (s.cols() != d) throw InvalidArgument("write_cache: inconsistent hidden dimension");
    if (s.rows() == 0) throw InvalidArgument("write_cache: sentence with zero tokens");
  }

  std::vector<unsigned char> header;
  header.insert(header.end(), kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(header, kCacheVersion);
  put_le<std::uint32_t>(header, static_cast<std::uint32_t>(d));
  put_le<std::uint64_t>(header, sentences.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_cache: cannot open '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  std::vector<unsigned char> record;
  for (const Matrix& s : sentences) {
    record.clear();
    put_le<std::uint32_t>(record, static_cast<std::uint32_t>(s.rows()));
    for (double v : s.data()) put_f32(record, v);
    hash = fnv1a64(record, hash);
    out.write(reinterpret_cast<const char*>(record.data()), static_cast<std::streamsize>(record.size()));
  }
  record.clear();
  put_le<std::uint64_t>(record, hash);
  out.write(reinterpret_cast<const char*>(record.data()), static_cast<std::streamsize>(record.size()));
  if (!out) throw DataError("write_cache: write failed for '" + path.string() + "'");
}

CacheReader::CacheReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), hash_(0xcbf29ce484222325ULL) {
  if (!in_) throw DataError("cache: cannot open '" + path.string() + "'");
  file_size_ = std::filesystem::file_size(path);
  std::array<unsigned char, 20> header{};
  in_.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in_.gcount() >= 4 && std::memcmp(header.data(), kMagic.data(), 4) != 0)
    throw CacheBadMagic("cache: bad magic in '" + path.string() + "' (expected GEC1)");
  if (in_.gcount() != static_cast<std::streamsize>(header.size()))
    throw CacheTruncated("cache: truncated header in '" + path.string() + "'");
  version_ = get_le<std::uint32_t>(header.data() + 4);
  dim_ = get_le<std::uint32_t>(header.data() + 8);
  count_ = get_le<std::uint64_t>(header.data() + 12);
  if (version_ != kCacheVersion)
    throw DataError("cache: unsupported version " + std::to_string(version_));
  if (dim_ == 0) throw DataError("cache: hidden dimension is 0");
}

void CacheReader::read_exact(void* dst, std::size_t n, const char* what) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n))
    throw CacheTruncated(std::string("cache: truncated payload while reading ") + what);
}

bool CacheReader::next(Matrix& out) {
  if (read_ == count_) {
    if (!verified_) {
      unsigned char buf[8];
      read_exact(buf, 8, "checksum");
      if (get_le<std::uint64_t>(buf) != hash_)
        throw CacheChecksumMismatch("cache: checksum mismatch, payload is corrupt");
      verified_ = true;
    }
    return false;
  }
  unsigned char len_buf[4];
  read_exact(len_buf, 4, "sentence length");
  hash_ = fnv1a64(len_buf, hash_);
  const std::uint32_t len = get_le<std::uint32_t>(len_buf);
  if (len == 0) throw DataError("cache: sentence with zero tokens");
  const std::uint64_t consumed = static_cast<std::uint64_t>(in_.tellg());
  const std::uint64_t needed = static_cast<std::uint64_t>(len) * dim_ * 4 + 8;
  if (consumed + needed > file_size_)
    throw CacheTruncated("cache: truncated payload (sentence length exceeds file size)");
  std::vector<unsigned char> payload(static_cast<std::size_t>(len) * dim_ * 4);
  read_exact(payload.data(), payload.size(), "token states");
  hash_ = fnv1a64(payload, hash_);
  std::vector<double> values(static_cast<std::size_t>(len) * dim_);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload.data() + 4 * i));
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("cache: non-finite value in token states");
  out = Matrix(len, dim_, std::move(values));
  ++read_;
  return true;
}

EmbeddingCache read_cache(const std::filesystem::path& path) {
  CacheReader reader(path);
  EmbeddingCache cache;
  cache.version = reader.version();
  cache.dim = reader.dim();
  cache.sentences.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(reader.sentence_count(), 1 << 20)));
  Matrix m;
  while (reader.next(m)) cache.sentences.push_back(std::move(m));
  return cache;
}

}  // namespace glot
