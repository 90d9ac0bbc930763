#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace condmon {

// FNV-1a 64-bit. Used for split fingerprints and manifest input hashes;
// these detect accidental divergence, they are not security hashes.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }

  void update(std::string_view s) { update(s.data(), s.size()); }

  void update(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    update(&bits, sizeof(bits));
  }

  void update(std::int64_t x) { update(&x, sizeof(x)); }

  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t h);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace condmon
