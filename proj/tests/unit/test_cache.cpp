#include <doctest.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "glot/cache.hpp"
#include "support/testing.hpp"

using namespace glot;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "glot_test_cache";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Values exactly representable in float32.
Matrix float_matrix(std::size_t rows, std::size_t cols, CounterRng& rng) {
  Matrix m = glot::testing::random_matrix(rows, cols, rng);
  for (double& v : m.data()) v = static_cast<double>(static_cast<float>(v));
  return m;
}

std::vector<Matrix> three_sentences() {
  CounterRng rng(1, "cache");
  return {float_matrix(3, 5, rng), float_matrix(1, 5, rng), float_matrix(7, 5, rng)};
}

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

}  // namespace

TEST_CASE("round trip is bit exact") {
  const auto sentences = three_sentences();
  const fs::path p = scratch("round.gec");
  write_cache(sentences, p);
  const EmbeddingCache c = read_cache(p);
  CHECK(c.version == kCacheVersion);
  CHECK(c.dim == 5);
  REQUIRE(c.sentences.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.sentences[i] == sentences[i]);
}

TEST_CASE("narrowing to float32") {
  const Matrix m{{0.1, 1.0 / 3.0}};
  const fs::path p = scratch("narrow.gec");
  write_cache(std::span(&m, 1), p);
  const Matrix back = read_cache(p).sentences[0];
  CHECK(back(0, 0) == static_cast<double>(0.1f));
  CHECK(back(0, 1) == static_cast<double>(static_cast<float>(1.0 / 3.0)));
}

TEST_CASE("byte layout") {
  const Matrix m{{1.0, -2.0}};
  const fs::path p = scratch("layout.gec");
  write_cache(std::span(&m, 1), p);
  const auto bytes = slurp(p);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 8 + 4 + 8 + 8);
  CHECK(bytes[0] == 0x47);
  CHECK(bytes[1] == 0x45);
  CHECK(bytes[2] == 0x43);
  CHECK(bytes[3] == 0x31);

  // Hand-assembled file with explicit little-endian fields.
  std::vector<unsigned char> want{'G', 'E', 'C', '1'};
  put_le<std::uint32_t>(want, 1);
  put_le<std::uint32_t>(want, 2);
  put_le<std::uint64_t>(want, 1);
  std::vector<unsigned char> payload;
  put_le<std::uint32_t>(payload, 1);
  for (float f : {1.0f, -2.0f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_le<std::uint32_t>(payload, bits);
  }
  want.insert(want.end(), payload.begin(), payload.end());
  put_le<std::uint64_t>(want, fnv1a64(payload));
  CHECK(bytes == want);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
  const unsigned char a[] = {'a'};
  CHECK(fnv1a64(a) == 0xaf63dc4c8601ec8cULL);
  const unsigned char foobar[] = {'f', 'o', 'o', 'b', 'a', 'r'};
  CHECK(fnv1a64(foobar) == 0x85944171f73967e8ULL);
}

TEST_CASE("streaming matches whole-file read") {
  const auto sentences = three_sentences();
  const fs::path p = scratch("stream.gec");
  write_cache(sentences, p);
  CacheReader r(p);
  CHECK(r.sentence_count() == 3);
  CHECK(r.dim() == 5);
  Matrix m;
  std::size_t i = 0;
  while (r.next(m)) CHECK(m == sentences[i++]);
  CHECK(i == 3);
  CHECK_FALSE(r.next(m));
}

TEST_CASE("corruption is detected") {
  const auto sentences = three_sentences();
  const fs::path p = scratch("corrupt.gec");
  write_cache(sentences, p);
  const auto good = slurp(p);

  SUBCASE("bad magic") {
    auto bytes = good;
    bytes[3] = '2';
    dump(p, bytes);
    CHECK_THROWS_AS(read_cache(p), CacheBadMagic);
  }
  SUBCASE("flipping a low mantissa byte in the payload") {
    auto bytes = good;
    // First float of the first sentence: header 20 bytes, length 4 bytes.
    bytes[24] ^= 0x01;
    dump(p, bytes);
    CHECK_THROWS_AS(read_cache(p), CacheChecksumMismatch);
  }
  SUBCASE("every single payload byte flip") {
    for (std::size_t k = 20; k + 8 < good.size(); k += 7) {
      auto bytes = good;
      bytes[k] ^= 0x10;
      dump(p, bytes);
      CHECK_THROWS_AS(read_cache(p), DataError);
    }
  }
  SUBCASE("checksum byte") {
    auto bytes = good;
    bytes.back() ^= 0x80;
    dump(p, bytes);
    CHECK_THROWS_AS(read_cache(p), CacheChecksumMismatch);
  }
  SUBCASE("truncated payload") {
    auto bytes = good;
    bytes.resize(bytes.size() - 12);
    dump(p, bytes);
    CHECK_THROWS_AS(read_cache(p), CacheTruncated);
  }
  SUBCASE("truncated header") {
    auto bytes = good;
    bytes.resize(10);
    dump(p, bytes);
    CHECK_THROWS_AS(read_cache(p), CacheTruncated);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_cache(scratch("absent.gec")), DataError); }
}

TEST_CASE("writer preconditions") {
  const fs::path p = scratch("bad.gec");
  const std::vector<Matrix> mixed{Matrix(2, 3), Matrix(2, 4)};
  CHECK_THROWS_AS(write_cache(mixed, p), InvalidArgument);
  const std::vector<Matrix> empty_sentence{Matrix(0, 3)};
  CHECK_THROWS_AS(write_cache(empty_sentence, p), InvalidArgument);
  CHECK_THROWS_AS(write_cache(std::vector<Matrix>{}, p), InvalidArgument);
}

TEST_CASE("file digest") {
  const fs::path p = scratch("digest.bin");
  dump(p, {'f', 'o', 'o', 'b', 'a', 'r'});
  CHECK(file_digest(p) == 0x85944171f73967e8ULL);
}
