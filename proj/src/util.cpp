#include "styloforge/util.hpp"

#include <cctype>

#include "styloforge/error.hpp"

namespace styloforge {

std::string trim(std::string_view s) {
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return std::string(s.substr(begin, end - begin));
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t salt) {
  return splitmix64(splitmix64(base) ^ splitmix64(salt * 0x9e3779b97f4a7c15ULL + 1));
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string bytes_to_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char b : bytes) {
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
    } else {
      out.push_back(static_cast<char>(0xc0 | (b >> 6)));
      out.push_back(static_cast<char>(0x80 | (b & 0x3f)));
    }
  }
  return out;
}

std::string utf8_to_bytes(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for (size_t i = 0; i < utf8.size();) {
    unsigned char c = static_cast<unsigned char>(utf8[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
    } else {
      if ((c & 0xe0) != 0xc0 || i + 1 >= utf8.size())
        raise(ErrorCode::FormatError, "byte-string out of U+0000..U+00FF range");
      unsigned char c2 = static_cast<unsigned char>(utf8[i + 1]);
      unsigned cp = ((c & 0x1f) << 6) | (c2 & 0x3f);
      if (cp > 0xff) raise(ErrorCode::FormatError, "byte-string out of U+0000..U+00FF range");
      out.push_back(static_cast<char>(cp));
      i += 2;
    }
  }
  return out;
}

}  // namespace styloforge
