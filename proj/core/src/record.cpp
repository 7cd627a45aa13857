#include "soilnet/record.hpp"

#include <string>

#include "soilnet/calibration.hpp"

namespace soilnet {
namespace {

void put_u16(std::byte* out, std::uint16_t v) {
  out[0] = static_cast<std::byte>(v >> 8);
  out[1] = static_cast<std::byte>(v & 0xFF);
}

void put_u32(std::byte* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::byte>((v >> (24 - 8 * i)) & 0xFF);
}

std::uint16_t get_u16(const std::byte* in) {
  return static_cast<std::uint16_t>((std::to_integer<unsigned>(in[0]) << 8) | std::to_integer<unsigned>(in[1]));
}

std::uint32_t get_u32(const std::byte* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | std::to_integer<std::uint32_t>(in[i]);
  return v;
}

}  // namespace

RecordBytes serialize(const SampleRecord& record) {
  RecordBytes out{};
  put_u32(out.data(), record.mote_time_s);
  put_u16(out.data() + 4, static_cast<std::uint16_t>(record.seq & 0xFFFF));
  for (std::size_t i = 0; i < kReadingCount; ++i) {
    if (record.readings[i] > kAdcMax) throw std::out_of_range("reading exceeds 10-bit ADC range");
    put_u16(out.data() + 6 + 2 * i, record.readings[i]);
  }
  return out;
}

std::uint64_t expand_seq(std::uint16_t low, std::uint64_t window_start) {
  const std::uint64_t candidate = (window_start & ~std::uint64_t{0xFFFF}) | low;
  return candidate >= window_start ? candidate : candidate + 0x10000;
}

SampleRecord deserialize(std::span<const std::byte, kRecordSizeBytes> bytes, std::uint64_t window_start) {
  SampleRecord r;
  r.mote_time_s = get_u32(bytes.data());
  r.seq = expand_seq(get_u16(bytes.data() + 4), window_start);
  for (std::size_t i = 0; i < kReadingCount; ++i) {
    r.readings[i] = get_u16(bytes.data() + 6 + 2 * i);
    if (r.readings[i] > kAdcMax) throw MalformedRecordError("reading exceeds 10-bit ADC range");
  }
  return r;
}

RangeEvictedError::RangeEvictedError(std::uint64_t requested, std::uint64_t tail)
    : std::out_of_range("records from seq " + std::to_string(requested) + " were overwritten; oldest retained is " +
                        std::to_string(tail)),
      lost_(tail - requested) {}

FlashRing::FlashRing() : storage_(kFlashCapacityBytes) {}

std::uint64_t FlashRing::append(std::uint32_t mote_time_s,
                                const std::array<std::uint16_t, kReadingCount>& readings) {
  const SampleRecord record{head_, mote_time_s, readings};
  const RecordBytes bytes = serialize(record);
  const std::size_t slot = static_cast<std::size_t>(head_ % kFlashCapacityRecords);
  std::copy(bytes.begin(), bytes.end(), storage_.begin() + static_cast<std::ptrdiff_t>(slot * kRecordSizeBytes));
  if (size() == kFlashCapacityRecords) {
    ++tail_;
    ++overwritten_;
  }
  return head_++;
}

std::span<const std::byte, kRecordSizeBytes> FlashRing::raw(std::uint64_t seq) const {
  if (seq < tail_) throw RangeEvictedError(seq, tail_);
  if (seq >= head_) throw std::out_of_range("sequence number not yet written");
  const std::size_t slot = static_cast<std::size_t>(seq % kFlashCapacityRecords);
  return std::span<const std::byte, kRecordSizeBytes>(storage_.data() + slot * kRecordSizeBytes, kRecordSizeBytes);
}

SampleRecord FlashRing::at(std::uint64_t seq) const { return deserialize(raw(seq), tail_); }

std::vector<SampleRecord> FlashRing::read_range(std::uint64_t from_seq, std::uint64_t to_seq) const {
  if (from_seq < tail_) throw RangeEvictedError(from_seq, tail_);
  if (to_seq > head_ || from_seq > to_seq) throw std::out_of_range("flash read range outside [tail, head)");
  std::vector<SampleRecord> out;
  out.reserve(static_cast<std::size_t>(to_seq - from_seq));
  for (std::uint64_t s = from_seq; s < to_seq; ++s) out.push_back(deserialize(raw(s), tail_));
  return out;
}

}  // namespace soilnet
