#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qrelay/timetag.hpp"

using namespace qrelay::tt;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("qtt round-trip is bit-exact") {
    std::vector<TimeTag> tags = {
        {-1234567890123LL, 0, 0}, {0, 1, kFlagNonOverlapped}, {42, 5, 0}, {1LL << 60, 255, 3}};
    const auto path = temp_file("qrelay_test_roundtrip.qtt");
    write_qtt(path.string(), tags, 987654321);

    std::uint64_t duration = 0;
    const auto back = read_qtt(path.string(), &duration);
    CHECK(duration == 987654321);
    REQUIRE(back.size() == tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) CHECK(back[i] == tags[i]);
    std::filesystem::remove(path);
}

TEST_CASE("qtt file layout: magic, count, 12-byte records") {
    std::vector<TimeTag> tags = {{1, 2, 3}};
    const auto path = temp_file("qrelay_test_layout.qtt");
    write_qtt(path.string(), tags, 7);
    CHECK(std::filesystem::file_size(path) == 4 + 4 + 8 + 12);

    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "QTT1");
    std::filesystem::remove(path);
}

TEST_CASE("reader rejects truncated and foreign files") {
    const auto path = temp_file("qrelay_test_bad.qtt");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS(read_qtt(path.string()));
    std::filesystem::remove(path);
    CHECK_THROWS(read_qtt((temp_file("qrelay_does_not_exist.qtt")).string()));
}

TEST_CASE("sort orders by time then channel") {
    std::vector<TimeTag> tags = {{5, 1, 0}, {5, 0, 0}, {-3, 2, 0}, {7, 0, 0}};
    sort_tags(tags);
    CHECK(tags[0].t_ps == -3);
    CHECK(tags[1].t_ps == 5);
    CHECK(tags[1].channel == 0);
    CHECK(tags[2].channel == 1);
    CHECK(tags[3].t_ps == 7);
}

TEST_CASE("times_of extracts the timestamp column") {
    std::vector<TimeTag> tags = {{1, 0, 0}, {2, 1, 0}, {3, 0, 1}};
    const auto t = times_of(tags);
    CHECK(t == std::vector<std::int64_t>{1, 2, 3});
}
