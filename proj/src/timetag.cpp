#include "qrelay/timetag.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qrelay::tt {

void sort_tags(std::vector<TimeTag>& tags) {
    std::sort(tags.begin(), tags.end(), [](const TimeTag& a, const TimeTag& b) {
        if (a.t_ps != b.t_ps) return a.t_ps < b.t_ps;
        return a.channel < b.channel;
    });
}

namespace {
constexpr char kMagic[4] = {'Q', 'T', 'T', '1'};

template <typename T>
void put(std::string& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
}

template <typename T>
T get(const char*& p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
}
}  // namespace

void write_qtt(const std::string& path, std::span<const TimeTag> tags,
               std::uint64_t duration_ps) {
    std::string buf;
    buf.reserve(16 + 12 * tags.size());
    buf.append(kMagic, 4);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(tags.size()));
    put<std::uint64_t>(buf, duration_ps);
    for (const TimeTag& t : tags) {
        put<std::int64_t>(buf, t.t_ps);
        put<std::uint8_t>(buf, t.channel);
        put<std::uint8_t>(buf, t.flags);
        put<std::uint16_t>(buf, 0);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<TimeTag> read_qtt(const std::string& path, std::uint64_t* duration_ps) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("not a QTT1 file: " + path);
    const char* p = buf.data() + 4;
    const auto n = get<std::uint32_t>(p);
    const auto dur = get<std::uint64_t>(p);
    if (buf.size() < 16 + 12ull * n) throw std::runtime_error("truncated QTT1 file: " + path);
    if (duration_ps) *duration_ps = dur;
    std::vector<TimeTag> tags(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        tags[i].t_ps = get<std::int64_t>(p);
        tags[i].channel = get<std::uint8_t>(p);
        tags[i].flags = get<std::uint8_t>(p);
        (void)get<std::uint16_t>(p);
    }
    return tags;
}

std::vector<std::int64_t> times_of(std::span<const TimeTag> tags) {
    std::vector<std::int64_t> t(tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) t[i] = tags[i].t_ps;
    return t;
}

}  // namespace qrelay::tt
