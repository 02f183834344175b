#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

namespace heterseed::detail {

// Little-endian encoding independent of host byte order.
template <class U>
void write_le(std::ostream& os, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  unsigned char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(buf[i], buf[sizeof(U) - 1 - i]);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
bool read_le(std::istream& is, U& value) {
  static_assert(std::is_trivially_copyable_v<U>);
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) return false;
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(buf[i], buf[sizeof(U) - 1 - i]);
  }
  std::memcpy(&value, buf, sizeof(U));
  return true;
}

}  // namespace heterseed::detail
