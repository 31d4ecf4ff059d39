#include <gtest/gtest.h>

#include <sstream>

#include "antibunch/timetag_io.hpp"

using namespace antibunch;

namespace {

std::string bytes_of(const std::vector<TimeTag>& tags) {
  std::ostringstream os(std::ios::binary);
  write_timetags(os, tags);
  return os.str();
}

std::vector<TimeTag> parse(const std::string& b) {
  std::istringstream is(b, std::ios::binary);
  return read_timetags(is);
}

FormatError::Kind kind_of(const std::string& b) {
  try {
    parse(b);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no FormatError";
  return FormatError::Kind::io;
}

const std::vector<TimeTag> kSample{{0, Channel::A}, {5, Channel::A}, {5, Channel::B}, {0xffff'ffff'ffffull, Channel::B}};

}  // namespace

TEST(TimeTagIo, RoundTrip) {
  const auto b = bytes_of(kSample);
  ASSERT_EQ(b.size(), kTagHeaderSize + kSample.size() * kTagRecordSize);
  EXPECT_EQ(b.substr(0, 8), "PTAG0001");
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1);
  EXPECT_EQ(static_cast<unsigned char>(b[9]), 0);
  EXPECT_EQ(static_cast<unsigned char>(b[10]), kSample.size());
  EXPECT_EQ(parse(b), kSample);
  EXPECT_EQ(bytes_of(parse(b)), b);
}

TEST(TimeTagIo, LittleEndianRecord) {
  const auto b = bytes_of({{0x0102030405060708ull, Channel::B}});
  const unsigned char expect[16] = {8, 7, 6, 5, 4, 3, 2, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  for (int i = 0; i < 16; ++i) EXPECT_EQ(static_cast<unsigned char>(b[kTagHeaderSize + i]), expect[i]) << i;
}

TEST(TimeTagIo, EmptyFile) {
  const auto b = bytes_of({});
  EXPECT_EQ(b.size(), kTagHeaderSize);
  EXPECT_TRUE(parse(b).empty());
}

TEST(TimeTagIo, BadMagic) {
  auto b = bytes_of(kSample);
  b.replace(0, 4, "XXXX");
  EXPECT_EQ(kind_of(b), FormatError::Kind::bad_magic);
}

TEST(TimeTagIo, BadVersion) {
  auto b = bytes_of(kSample);
  b[8] = 2;
  EXPECT_EQ(kind_of(b), FormatError::Kind::bad_version);
}

TEST(TimeTagIo, Truncated) {
  const auto b = bytes_of(kSample);
  EXPECT_EQ(kind_of(b.substr(0, b.size() - 1)), FormatError::Kind::truncated);
  EXPECT_EQ(kind_of(b.substr(0, 12)), FormatError::Kind::truncated);
  EXPECT_EQ(kind_of(b.substr(0, 4)), FormatError::Kind::truncated);
}

TEST(TimeTagIo, ReservedBytesMustBeZero) {
  auto b = bytes_of(kSample);
  b[kTagHeaderSize + kTagRecordSize + 12] = 1;
  EXPECT_EQ(kind_of(b), FormatError::Kind::reserved_nonzero);
  auto c = bytes_of(kSample);
  c[kTagHeaderSize + 8] = 2;  // channel outside {0, 1}
  EXPECT_EQ(kind_of(c), FormatError::Kind::reserved_nonzero);
}

TEST(TimeTagIo, Unsorted) {
  auto b = bytes_of(kSample);
  // Swap the timestamps of records 1 and 3 by rewriting record 1.
  b[kTagHeaderSize + kTagRecordSize] = 9;
  EXPECT_EQ(kind_of(b), FormatError::Kind::unsorted);
  std::ostringstream os;
  const std::vector<TimeTag> bad{{5, Channel::B}, {5, Channel::A}};
  EXPECT_THROW(write_timetags(os, bad), FormatError);
}

TEST(TimeTagIo, MissingFile) {
  try {
    read_timetags(std::filesystem::path("/nonexistent/file.ptag"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::io);
  }
}

TEST(TimeTagIo, ChannelsMergeAndSplit) {
  TimeTagStream a{Channel::A, {1, 4, 9}, 20};
  TimeTagStream b{Channel::B, {1, 2, 10}, 20};
  const auto tags = merge_channels(a, b);
  ASSERT_EQ(tags.size(), 6u);
  EXPECT_TRUE(std::is_sorted(tags.begin(), tags.end(), detail::tag_less));
  const auto [a2, b2] = split_channels(tags, 20);
  EXPECT_EQ(a2, a);
  EXPECT_EQ(b2, b);
  const auto [a3, b3] = split_channels(tags, std::nullopt);
  EXPECT_EQ(a3.duration, 11u);
  EXPECT_EQ(b3.times, b.times);
}
