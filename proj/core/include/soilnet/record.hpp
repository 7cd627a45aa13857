#pragma once

// On-flash and on-air sample record, and the mote's circular flash log.
//
// Wire layout (16 bytes, big-endian):
//   offset 0  u32  mote_time_s   seconds since boot
//   offset 4  u16  seq & 0xFFFF  low bits of the record sequence number
//   offset 6  u16 x 5            soil_temp, soil_moisture, box_temp, photo, battery
//
// The full 64-bit sequence number is recovered from the low bits and a
// window start known to the reader (the ring never holds more than 32768
// records, half the 16-bit space).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace soilnet {

inline constexpr std::size_t kRecordSizeBytes = 16;
inline constexpr std::size_t kFlashCapacityBytes = 524288;
inline constexpr std::size_t kFlashCapacityRecords = kFlashCapacityBytes / kRecordSizeBytes;  // 32768
inline constexpr std::size_t kReadingCount = 5;

using RecordBytes = std::array<std::byte, kRecordSizeBytes>;

struct SampleRecord {
  std::uint64_t seq = 0;
  std::uint32_t mote_time_s = 0;
  std::array<std::uint16_t, kReadingCount> readings{};

  bool operator==(const SampleRecord&) const = default;
};

class MalformedRecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::out_of_range if any reading exceeds 1023.
RecordBytes serialize(const SampleRecord& record);
/// Throws MalformedRecordError if a reading exceeds 1023.
SampleRecord deserialize(std::span<const std::byte, kRecordSizeBytes> bytes, std::uint64_t window_start);
/// Smallest sequence number >= window_start whose low 16 bits equal `low`.
std::uint64_t expand_seq(std::uint16_t low, std::uint64_t window_start);

class RangeEvictedError : public std::out_of_range {
 public:
  RangeEvictedError(std::uint64_t requested, std::uint64_t tail);
  std::uint64_t lost_records() const noexcept { return lost_; }

 private:
  std::uint64_t lost_;
};

/// 512 KB circular log of serialized records. head_seq is the next sequence
/// number to be written; tail_seq the oldest still retained.
class FlashRing {
 public:
  FlashRing();

  /// Assigns the next sequence number, overwriting the oldest record when full.
  std::uint64_t append(std::uint32_t mote_time_s, const std::array<std::uint16_t, kReadingCount>& readings);

  std::uint64_t head_seq() const { return head_; }
  std::uint64_t tail_seq() const { return tail_; }
  std::size_t size() const { return static_cast<std::size_t>(head_ - tail_); }
  std::size_t bytes_used() const { return size() * kRecordSizeBytes; }
  std::uint64_t overwritten_count() const { return overwritten_; }

  /// Records [from_seq, to_seq) in sequence order.
  std::vector<SampleRecord> read_range(std::uint64_t from_seq, std::uint64_t to_seq) const;
  SampleRecord at(std::uint64_t seq) const;
  std::span<const std::byte, kRecordSizeBytes> raw(std::uint64_t seq) const;

 private:
  std::vector<std::byte> storage_;
  std::uint64_t head_ = 0;
  std::uint64_t tail_ = 0;
  std::uint64_t overwritten_ = 0;
};

}  // namespace soilnet
