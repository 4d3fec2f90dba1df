#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "arf/anomaly.hpp"
#include "arf/core/error.hpp"
#include "arf/series_synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace arf;

namespace {

TimeSeries constant_series(std::size_t T, std::size_t V, double value, std::string id = "s",
                           UnixSeconds start = 1'740'787'200) {
    TimeSeries s;
    s.series_id = std::move(id);
    s.start_time = start;
    s.step = 60;
    s.length = T;
    s.channels = V;
    for (std::size_t c = 0; c < V; ++c) s.channel_names.push_back("pod:" + std::to_string(c + 1));
    s.values.assign(T * V, value);
    return s;
}

TimeSeries noisy_series(std::size_t T, std::size_t V, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.length_distribution.pieces = {{T, T, 1.0}};
    cfg.variate_distribution = {V, V};
    cfg.zero_baseline_probability = 0.0;
    Rng rng(seed);
    auto s = generate_series(cfg, rng);
    s.series_id = "n" + std::to_string(seed);
    return s;
}

AnomalyRecord record(AnomalyKind kind, std::vector<std::size_t> channels, std::size_t start, std::size_t end,
                     double factor) {
    AnomalyRecord r;
    r.kind = kind;
    r.channels = std::move(channels);
    r.start_idx = start;
    r.end_idx = end;
    r.magnitude_factor = factor;
    r.noise_seed = 17;
    return r;
}

}  // namespace

TEST(Anomaly, AlwaysNoneGivesEmptyPlan) {
    AnomalyConfig cfg;
    cfg.p_none = 1.0;
    const auto s = noisy_series(500, 3, 1);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        EXPECT_TRUE(sample_plan(s, cfg, rng).empty());
    }
}

TEST(Anomaly, WindowStartsAreUniform) {
    AnomalyConfig cfg;
    cfg.p_none = 0.0;
    cfg.p_second_record = 0.0;
    cfg.p_began_before = 0.0;
    cfg.p_unresolved = 0.0;
    cfg.kind_weights = {1, 0, 0, 0, 0, 0};
    const auto s = noisy_series(1000, 2, 2);
    constexpr int kBins = 20;
    constexpr int kDraws = 10'000;
    std::vector<int> counts(kBins);
    Rng rng(3);
    for (int i = 0; i < kDraws; ++i) {
        const auto plan = sample_plan(s, cfg, rng);
        ASSERT_EQ(plan.size(), 1u);
        const auto& r = plan[0];
        ASSERT_GE(r.start_idx, 1u);
        ASSERT_LE(r.end_idx, s.length - 1);
        // Rescale the admissible start range [1, T - len - 1] to [0, 1).
        const double span = static_cast<double>(s.length - r.window() - 1);
        const double u = (static_cast<double>(r.start_idx) - 1.0 + 0.5) / span;
        ++counts[std::min(kBins - 1, static_cast<int>(u * kBins))];
    }
    double chi2 = 0.0;
    const double e = static_cast<double>(kDraws) / kBins;
    for (int c : counts) chi2 += (c - e) * (c - e) / e;
    EXPECT_LT(chi2, 43.82);  // df 19, p = 0.001
}

TEST(Anomaly, SpikesAreShort) {
    AnomalyConfig cfg;
    cfg.p_none = 0.0;
    cfg.kind_weights = {0, 1, 0, 0, 0, 0};
    const auto s = noisy_series(1000, 2, 4);
    EXPECT_EQ(max_spike_width(1000), 5u);
    Rng rng(5);
    for (int i = 0; i < 500; ++i)
        for (const auto& r : sample_plan(s, cfg, rng)) {
            EXPECT_EQ(r.kind, AnomalyKind::TransientSpike);
            EXPECT_GE(r.window(), 1u);
            EXPECT_LE(r.window(), 5u);
        }
}

TEST(Anomaly, PlansRespectChannelsAndOverlap) {
    AnomalyConfig cfg;
    cfg.p_none = 0.0;
    cfg.p_second_record = 1.0;
    Rng rng(6);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto s = noisy_series(400, 1 + seed % 6, seed);
        const auto plan = sample_plan(s, cfg, rng);
        ASSERT_FALSE(plan.empty());
        for (std::size_t i = 0; i < plan.size(); ++i) {
            EXPECT_LE(plan[i].channels.size(), cfg.max_channels_per_record);
            EXPECT_LE(plan[i].end_idx, s.length);
            for (std::size_t j = i + 1; j < plan.size(); ++j) EXPECT_FALSE(plan[i].overlaps(plan[j]));
            if (plan[i].kind == AnomalyKind::SeasonalityChange) {
                for (auto c : plan[i].channels) EXPECT_TRUE(s.profile[c].has_seasonality());
            }
        }
        EXPECT_NO_THROW(inject(s, plan));
    }
}

TEST(Anomaly, EmptyPlanIsIdentity) {
    const auto s = noisy_series(300, 4, 7);
    const auto out = inject(s, {});
    ASSERT_EQ(out.values.size(), s.values.size());
    EXPECT_EQ(std::memcmp(out.values.data(), s.values.data(), s.values.size() * sizeof(double)), 0);
}

TEST(Anomaly, LevelShiftRaisesTheWindowMean) {
    const auto s = noisy_series(1000, 3, 8);
    const double f = 2.0;
    const auto r = record(AnomalyKind::LevelShift, {1}, 400, 500, f);
    const auto out = inject(s, {r});
    double ref = 0.0, pre = 0.0, post = 0.0;
    for (std::size_t t = 0; t < s.length; ++t) ref = std::max(ref, std::fabs(s.at(t, 1)));
    for (std::size_t t = 400; t < 500; ++t) {
        pre += s.at(t, 1);
        post += out.at(t, 1);
    }
    pre /= 100.0;
    post /= 100.0;
    const double sigma = s.profile[1].noise_scale;
    EXPECT_NEAR(post, pre + f * ref, 4.0 * sigma / std::sqrt(100.0));
    // Every other cell is untouched.
    for (std::size_t t = 0; t < s.length; ++t)
        for (std::size_t c = 0; c < s.channels; ++c)
            if (c != 1 || t < 400 || t >= 500) {
                ASSERT_EQ(out.at(t, c), s.at(t, c));
            }
}

TEST(Anomaly, FlatlineIsConstant) {
    const auto s = noisy_series(600, 2, 9);
    for (std::size_t start : {0u, 100u}) {
        const auto r = record(AnomalyKind::Flatline, {0}, start, start + 50, 1.0);
        const auto out = inject(s, {r});
        for (std::size_t t = start; t < start + 50; ++t) EXPECT_EQ(out.at(t, 0), out.at(start, 0));
        const auto ch = oracles::changed_cells(out, s);
        ASSERT_TRUE(ch.first.has_value());
        EXPECT_EQ(*ch.first, start);
    }
}

TEST(Anomaly, FlatlineWithMissingFill) {
    const auto s = noisy_series(600, 1, 10);
    auto r = record(AnomalyKind::Flatline, {0}, 200, 260, 1.0);
    r.flatline_fill = FlatlineFill::Missing;
    const auto out = inject(s, {r});
    for (std::size_t t = 200; t < 260; ++t) EXPECT_TRUE(is_missing(out.at(t, 0)));
    EXPECT_FALSE(is_missing(out.at(199, 0)));
}

TEST(Anomaly, TrendChangeRampsToFullAmplitude) {
    const auto s = constant_series(300, 1, 10.0);
    const auto out = inject(s, {record(AnomalyKind::TrendChange, {0}, 100, 200, 2.0)});
    EXPECT_DOUBLE_EQ(out.at(199, 0), 10.0 + 2.0 * 10.0);
    EXPECT_LT(out.at(100, 0), out.at(150, 0));
    EXPECT_EQ(out.at(200, 0), 10.0);
}

TEST(Anomaly, SeasonalityChangeNeedsASeasonalChannel) {
    const auto s = constant_series(300, 1, 10.0);
    EXPECT_THROW(inject(s, {record(AnomalyKind::SeasonalityChange, {0}, 10, 100, 1.0)}), InjectionError);
}

TEST(Anomaly, MagnitudeExamples) {
    const auto pre = constant_series(300, 1, 10.0);
    auto post = pre;
    for (std::size_t t = 100; t < 110; ++t) post.at(t, 0) = t == 105 ? 250.0 : 10.0;
    const auto r = record(AnomalyKind::TransientSpike, {0}, 100, 110, 1.0);
    EXPECT_DOUBLE_EQ(compute_magnitude(pre, post, r), 25.0);

    const auto zero = constant_series(300, 1, 0.0);
    auto zpost = zero;
    zpost.at(105, 0) = 25.0;
    EXPECT_DOUBLE_EQ(compute_magnitude(zero, zpost, r), 25.0);

    EXPECT_DOUBLE_EQ(compute_magnitude(pre, pre, r), 1.0);
}

TEST(Anomaly, MagnitudeMatchesTheOracle) {
    Rng rng(11);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = noisy_series(500, 3, seed + 100);
        AnomalyConfig cfg;
        cfg.p_none = 0.0;
        const auto plan = sample_plan(s, cfg, rng);
        const auto out = inject(s, plan);
        for (const auto& r : plan)
            EXPECT_NEAR(compute_magnitude(s, out, r), oracles::window_magnitude(out, s, r.start_idx, r.end_idx, r.channels),
                        1e-9 * compute_magnitude(s, out, r));
    }
}

TEST(Anomaly, OutOfBoundsRecordIsRejected) {
    const auto s = constant_series(300, 2, 1.0);
    EXPECT_THROW(inject(s, {record(AnomalyKind::LevelShift, {0}, 250, 301, 1.0)}), InjectionError);
    EXPECT_THROW(inject(s, {record(AnomalyKind::LevelShift, {2}, 10, 20, 1.0)}), InjectionError);
    EXPECT_THROW(inject(s, {record(AnomalyKind::LevelShift, {}, 10, 20, 1.0)}), InjectionError);
    EXPECT_THROW(inject(s, {record(AnomalyKind::LevelShift, {0}, 20, 20, 1.0)}), InjectionError);
}

TEST(Anomaly, EventLagsAreApplied) {
    const auto a = noisy_series(600, 2, 20);
    auto b = noisy_series(600, 2, 21);
    auto c = noisy_series(600, 2, 22);
    b.start_time = a.start_time;
    c.start_time = a.start_time;
    Rng rng(12);

    auto [ev, recs] = make_incident_event({&a, &b}, AnomalyKind::LevelShift, {0, 30}, "e0000", rng);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[1].start_idx, recs[0].start_idx + 30);
    EXPECT_EQ(recs[0].window(), recs[1].window());
    EXPECT_EQ(ev.members[1].lag_steps, 30);
    EXPECT_EQ(*recs[0].event_id, "e0000");

    auto [ev2, recs2] = make_incident_event({&a, &b}, AnomalyKind::LevelShift, {0, 0}, "e0001", rng);
    EXPECT_EQ(recs2[0].start_idx, recs2[1].start_idx);

    auto [ev3, recs3] = make_incident_event({&a, &b, &c}, AnomalyKind::TrendChange, {0, 10, -10}, "e0002", rng);
    EXPECT_EQ(recs3[1].start_idx, recs3[0].start_idx + 10);
    EXPECT_EQ(recs3[2].start_idx + 10, recs3[0].start_idx);
    for (const auto& r : recs3) {
        EXPECT_GE(r.start_idx, 1u);
        EXPECT_LE(r.end_idx, 599u);
    }
}

TEST(Anomaly, EventsFollowAbsoluteTime) {
    const auto a = noisy_series(600, 1, 30);
    auto b = noisy_series(600, 1, 31);
    b.start_time = a.start_time + 100 * 60;
    Rng rng(13);
    auto [ev, recs] = make_incident_event({&a, &b}, AnomalyKind::LevelShift, {0, 0}, "e0000", rng);
    EXPECT_EQ(a.time_at(recs[0].start_idx), b.time_at(recs[1].start_idx));
    EXPECT_EQ(ev.reference_time, a.time_at(recs[0].start_idx));
}

TEST(Anomaly, DisjointMembersCannotShareAnEvent) {
    const auto a = noisy_series(300, 1, 40);
    auto b = noisy_series(300, 1, 41);
    b.start_time = a.start_time + 1000 * 60;
    Rng rng(14);
    EXPECT_THROW(make_incident_event({&a, &b}, AnomalyKind::LevelShift, {0, 0}, "e", rng), EventError);
    auto c = noisy_series(300, 1, 42);
    c.step = 30;
    EXPECT_THROW(make_incident_event({&a, &c}, AnomalyKind::LevelShift, {0, 0}, "e", rng), EventError);
    EXPECT_THROW(make_incident_event({&a}, AnomalyKind::LevelShift, {0}, "e", rng), EventError);
}

TEST(Anomaly, RecordJsonRoundTrip) {
    auto r = record(AnomalyKind::VarianceChange, {0, 2}, 5, 50, 1.25);
    r.event_id = "e0003";
    r.lag_steps = -7;
    const auto back = record_from_json(to_json(r));
    EXPECT_EQ(back.kind, r.kind);
    EXPECT_EQ(back.channels, r.channels);
    EXPECT_EQ(back.start_idx, r.start_idx);
    EXPECT_EQ(back.end_idx, r.end_idx);
    EXPECT_EQ(back.magnitude_factor, r.magnitude_factor);
    EXPECT_EQ(back.event_id, r.event_id);
    EXPECT_EQ(back.lag_steps, r.lag_steps);
    EXPECT_EQ(back.noise_seed, r.noise_seed);
}
