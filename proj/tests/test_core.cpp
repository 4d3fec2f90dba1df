#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/rng.hpp"
#include "arf/core/time.hpp"
#include "arf/time_series.hpp"
#include "fixtures.hpp"

using namespace arf;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs = differs || x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, DeriveSeedSeparatesTagsAndIndices) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(7, "series", i));
        seen.insert(derive_seed(7, "group", i));
    }
    EXPECT_EQ(seen.size(), 2000u);
    EXPECT_EQ(derive_seed(7, "series", 3), derive_seed(7, "series", 3));
}

TEST(Rng, BelowIsUniform) {
    Rng rng(1);
    constexpr int kBins = 7;
    constexpr int kDraws = 70'000;
    std::vector<int> counts(kBins);
    for (int i = 0; i < kDraws; ++i) ++counts[rng.below(kBins)];
    double chi2 = 0.0;
    const double e = static_cast<double>(kDraws) / kBins;
    for (int c : counts) chi2 += (c - e) * (c - e) / e;
    EXPECT_LT(chi2, 22.46);  // df 6, p = 0.001
}

TEST(Rng, UniformIntInclusive) {
    Rng rng(2);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(-2, 2);
        ASSERT_GE(v, -2);
        ASSERT_LE(v, 2);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 5u);
    EXPECT_EQ(rng.uniform_int(4, 4), 4);
}

TEST(Rng, NormalMoments) {
    Rng rng(3);
    double s = 0.0, s2 = 0.0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
    Rng rng(4);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(Time, Rfc3339RoundTrip) {
    const UnixSeconds t = 1'740'787'200;
    EXPECT_EQ(format_rfc3339(t), "2025-03-01T00:00:00Z");
    EXPECT_EQ(parse_rfc3339("2025-03-01T00:00:00Z"), t);
    EXPECT_EQ(format_option_time(t + 3661), "2025-03-01 01:01:01");
    EXPECT_EQ(*try_parse_option_time("2025-03-01 01:01:01"), t + 3661);
    EXPECT_FALSE(try_parse_rfc3339("2025-03-01 01:01:01"));
    EXPECT_FALSE(try_parse_option_time("2025-03-01 01:01:01 trailing"));
    EXPECT_THROW(parse_rfc3339("yesterday"), ParseError);
    for (UnixSeconds x : {UnixSeconds{0}, UnixSeconds{951'782'400}, UnixSeconds{4'102'444'799}})
        EXPECT_EQ(parse_rfc3339(format_rfc3339(x)), x);
}

TEST(Io, FormatDoubleRoundTrips) {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform_int(-8, 8));
        EXPECT_EQ(*io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(25.0), "25");
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(kMissing), "");
    EXPECT_FALSE(io::parse_double("1.5x"));
    EXPECT_FALSE(io::parse_double(""));
    EXPECT_EQ(*io::parse_double(" +2 "), 2.0);
}

TEST(Io, Sha256KnownVector) {
    EXPECT_EQ(io::sha256_hex(std::string_view("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, ReadObserverSeesEveryRead) {
    fixtures::TempDir dir("obs");
    io::write_file(dir / "a.txt", "hello");
    std::vector<std::string> seen;
    {
        io::ScopedReadObserver obs([&](const io::fs::path& p) { seen.push_back(p.filename().string()); });
        EXPECT_EQ(io::read_file(dir / "a.txt"), "hello");
    }
    io::read_file(dir / "a.txt");
    EXPECT_EQ(seen, std::vector<std::string>{"a.txt"});
    EXPECT_THROW(io::read_file(dir / "missing.txt"), FilesystemError);
}

TEST(Errors, IntegrityErrorsHaveTheirOwnExitCode) {
    EXPECT_EQ(IntegrityError("x").exit_code(), kExitIntegrity);
    EXPECT_EQ(AlignmentError("x").exit_code(), kExitIntegrity);
    EXPECT_EQ(ConfigError("x").exit_code(), kExitUsage);
}

namespace {

TimeSeries small_series() {
    TimeSeries s;
    s.series_id = "s";
    s.start_time = 1'740'787'200;
    s.step = 60;
    s.length = 3;
    s.channels = 2;
    s.channel_names = {"pod:1,dc:1", "pod:\"2\""};
    s.values = {1.5, -2.0, kMissing, 1e-9, 3.0, 12345678.125};
    return s;
}

}  // namespace

TEST(TimeSeriesCsv, RoundTripKeepsValuesNamesAndMissing) {
    const auto s = small_series();
    const auto text = to_csv(s);
    EXPECT_EQ(text.substr(0, text.find('\n')), "timestamp,\"pod:1,dc:1\",\"pod:\"\"2\"\"\"");
    const auto back = from_csv(text, "s");
    EXPECT_EQ(back.length, 3u);
    EXPECT_EQ(back.channels, 2u);
    EXPECT_EQ(back.channel_names, s.channel_names);
    EXPECT_EQ(back.start_time, s.start_time);
    EXPECT_EQ(back.step, 60);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (is_missing(s.values[i])) EXPECT_TRUE(is_missing(back.values[i]));
        else EXPECT_EQ(back.values[i], s.values[i]);
    }
    EXPECT_EQ(to_csv(back), text);
}

TEST(TimeSeriesCsv, RejectsMalformedInput) {
    EXPECT_THROW(from_csv(""), ParseError);
    EXPECT_THROW(from_csv("time,a\n"), ParseError);
    EXPECT_THROW(from_csv("timestamp,a\n2025-03-01T00:00:00Z,1,2\n"), ParseError);
    EXPECT_THROW(from_csv("timestamp,a\n2025-03-01T00:00:00Z,abc\n"), ParseError);
    EXPECT_THROW(from_csv("timestamp,a\n2025-03-01T00:01:00Z,1\n2025-03-01T00:00:00Z,1\n"), ParseError);
}

TEST(TimeSeriesValidate, EnforcesLimits) {
    auto s = small_series();
    EXPECT_THROW(validate(s), ContractViolation);  // shorter than 240
    SeriesLimits loose;
    loose.min_length = 1;
    EXPECT_NO_THROW(validate(s, loose));
    s.channel_names[1] = s.channel_names[0];
    EXPECT_THROW(validate(s, loose), ContractViolation);
}
