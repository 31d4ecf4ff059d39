#pragma once

// PTAG0001 binary time-tag files.
//
//   offset 0   8 bytes  magic "PTAG0001"
//   offset 8   2 bytes  version, little endian (1)
//   offset 10  8 bytes  record count, little endian
//   offset 18  16 bytes per record:
//                8 bytes timestamp in ps, little endian unsigned
//                1 byte  channel (0 = A, 1 = B)
//                7 bytes reserved, zero
//
// Records are sorted by timestamp, ties by channel.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "antibunch/detection.hpp"
#include "antibunch/errors.hpp"

namespace antibunch {

inline constexpr std::array<char, 8> kTagMagic{'P', 'T', 'A', 'G', '0', '0', '0', '1'};
inline constexpr std::uint16_t kTagVersion = 1;
inline constexpr std::size_t kTagHeaderSize = 18;
inline constexpr std::size_t kTagRecordSize = 16;

namespace detail {

inline bool tag_less(const TimeTag& x, const TimeTag& y) {
  return x.timestamp != y.timestamp ? x.timestamp < y.timestamp : x.channel < y.channel;
}

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Interleaves two channels into file order.
inline std::vector<TimeTag> merge_channels(const TimeTagStream& a, const TimeTagStream& b) {
  std::vector<TimeTag> tags;
  tags.reserve(a.size() + b.size());
  for (auto t : a.times) tags.push_back({t, a.channel});
  for (auto t : b.times) tags.push_back({t, b.channel});
  std::stable_sort(tags.begin(), tags.end(), detail::tag_less);
  return tags;
}

/// Splits file records back into per-channel streams. Without an explicit
/// duration the window ends one ps after the last tag.
inline std::pair<TimeTagStream, TimeTagStream> split_channels(std::span<const TimeTag> tags,
                                                              std::optional<std::uint64_t> duration = {}) {
  TimeTagStream a, b;
  a.channel = Channel::A;
  b.channel = Channel::B;
  std::uint64_t last = 0;
  for (const auto& t : tags) {
    (t.channel == Channel::A ? a : b).times.push_back(t.timestamp);
    last = std::max(last, t.timestamp);
  }
  const std::uint64_t d = duration.value_or(tags.empty() ? 0 : last + 1);
  a.duration = b.duration = d;
  return {std::move(a), std::move(b)};
}

inline void write_timetags(std::ostream& os, std::span<const TimeTag> tags) {
  if (!std::is_sorted(tags.begin(), tags.end(), detail::tag_less)) {
    throw FormatError(FormatError::Kind::unsorted, "write_timetags: records must be sorted");
  }
  os.write(kTagMagic.data(), kTagMagic.size());
  detail::put_le<std::uint16_t>(os, kTagVersion);
  detail::put_le<std::uint64_t>(os, tags.size());
  const std::array<char, 7> reserved{};
  for (const auto& t : tags) {
    detail::put_le<std::uint64_t>(os, t.timestamp);
    os.put(static_cast<char>(t.channel));
    os.write(reserved.data(), reserved.size());
  }
  if (!os) throw FormatError(FormatError::Kind::io, "write_timetags: write failed");
}

inline std::vector<TimeTag> read_timetags(std::istream& is) {
  std::array<unsigned char, kTagHeaderSize> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  if (is.gcount() >= 8 && std::memcmp(header.data(), kTagMagic.data(), 8) != 0) {
    throw FormatError(FormatError::Kind::bad_magic, "read_timetags: bad magic");
  }
  if (static_cast<std::size_t>(is.gcount()) != header.size()) {
    throw FormatError(FormatError::Kind::truncated, "read_timetags: truncated header");
  }
  const auto version = detail::get_le<std::uint16_t>(header.data() + 8);
  if (version != kTagVersion) throw FormatError(FormatError::Kind::bad_version, "read_timetags: unsupported version");
  const auto count = detail::get_le<std::uint64_t>(header.data() + 10);

  std::vector<TimeTag> tags;
  tags.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  std::array<unsigned char, kTagRecordSize> rec{};
  for (std::uint64_t i = 0; i < count; ++i) {
    is.read(reinterpret_cast<char*>(rec.data()), rec.size());
    if (static_cast<std::size_t>(is.gcount()) != rec.size()) {
      throw FormatError(FormatError::Kind::truncated, "read_timetags: truncated record");
    }
    if (std::any_of(rec.begin() + 9, rec.end(), [](unsigned char c) { return c != 0; }) || rec[8] > 1) {
      throw FormatError(FormatError::Kind::reserved_nonzero, "read_timetags: reserved bytes must be zero");
    }
    TimeTag t{detail::get_le<std::uint64_t>(rec.data()), static_cast<Channel>(rec[8])};
    if (!tags.empty() && detail::tag_less(t, tags.back())) {
      throw FormatError(FormatError::Kind::unsorted, "read_timetags: records are not sorted");
    }
    tags.push_back(t);
  }
  return tags;
}

inline void write_timetags(const std::filesystem::path& path, std::span<const TimeTag> tags) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatError::Kind::io, "write_timetags: cannot open " + path.string());
  write_timetags(os, tags);
}

inline std::vector<TimeTag> read_timetags(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatError::Kind::io, "read_timetags: cannot open " + path.string());
  return read_timetags(is);
}

}  // namespace antibunch
