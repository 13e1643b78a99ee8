#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qrelay::tt {

// Detected click. Streams are kept sorted by t, ties broken by channel.
struct TimeTag {
    std::int64_t t_ps = 0;
    std::uint8_t channel = 0;
    std::uint8_t flags = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

inline constexpr std::uint8_t kFlagNonOverlapped = 0x01;

// Fixed channel assignment of the relay.
inline constexpr std::uint8_t kChCharlieH = 0;
inline constexpr std::uint8_t kChCharlieV = 1;
inline constexpr std::uint8_t kChBobP = 2;
inline constexpr std::uint8_t kChBobQ = 3;
inline constexpr std::uint8_t kChAuxA = 4;
inline constexpr std::uint8_t kChAuxB = 5;

void sort_tags(std::vector<TimeTag>& tags);

// Binary tag file: header = magic "QTT1", uint32 record count,
// uint64 duration_ps; then little-endian 12-byte records
// (int64 t_ps, uint8 channel, uint8 flags, uint16 reserved = 0).
void write_qtt(const std::string& path, std::span<const TimeTag> tags,
               std::uint64_t duration_ps);

std::vector<TimeTag> read_qtt(const std::string& path, std::uint64_t* duration_ps = nullptr);

std::vector<std::int64_t> times_of(std::span<const TimeTag> tags);

}  // namespace qrelay::tt
