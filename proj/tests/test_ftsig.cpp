#include <catch2/catch.hpp>

#include <sstream>

#include "demoplan/ftsig.hpp"

using namespace demoplan;
using namespace demoplan::ftsig;

namespace {

// Plateau trace: `level` during [t0, t1], `after` afterwards, `before`
// beforehand, sampled at 100 Hz.
ResistanceTrace plateau_trace(double t0, double t1, double level, double before, double after,
                              double t_end, Channel channel = Channel::Force) {
    ResistanceTrace tr;
    const int n = static_cast<int>(std::llround(t_end / 0.01));
    for (int i = 0; i <= n; ++i) {
        const double t = 0.01 * i;
        double v = t < t0 ? before : (t <= t1 ? level : after);
        ResistancePoint p;
        p.t = t;
        (channel == Channel::Force ? p.f_r : p.tau_r) = v;
        tr.samples.push_back(p);
    }
    return tr;
}

tactile::Segment seg(double a, double b) {
    tactile::Segment s;
    s.t_start = a;
    s.t_end = b;
    s.key_timestamp = a;
    return s;
}

// Independent sweep oracle: classification accuracy of "active iff value
// >= theta" over active and post samples.
double sweep_accuracy(const ResistanceTrace& tr, double a, double b, double post_window,
                      double theta) {
    int correct = 0, total = 0;
    for (const auto& p : tr.samples) {
        if (p.t >= a && p.t <= b) {
            ++total;
            if (p.f_r >= theta) ++correct;
        } else if (p.t > b && p.t <= b + post_window) {
            ++total;
            if (p.f_r < theta) ++correct;
        }
    }
    return static_cast<double>(correct) / total;
}

double max_sweep_accuracy(const ResistanceTrace& tr, double a, double b, double post_window) {
    double best = 0.0;
    for (const auto& p : tr.samples)
        for (double theta : {p.f_r, p.f_r + 1e-6})
            best = std::max(best, sweep_accuracy(tr, a, b, post_window, theta));
    return best;
}

}  // namespace

TEST_CASE("resistance opposes the commanded motion and clamps at zero") {
    WrenchSample s;
    s.force = {-3, 0, 0};
    auto [f1, t1] = resistance(s, Vec3{1, 0, 0}, std::nullopt);
    (void)t1;
    CHECK(f1 == Approx(3.0));

    s.force = {0, 4, 0};
    auto [f2, t2] = resistance(s, Vec3{1, 0, 0}, std::nullopt);
    (void)t2;
    CHECK(f2 == Approx(0.0));

    s.force = {};
    s.torque = {0, 0, -2};
    auto [f3, t3] = resistance(s, std::nullopt, Vec3{0, 0, 1});
    (void)f3;
    CHECK(t3 == Approx(2.0));

    // no motion context: magnitudes
    s.force = {3, 4, 0};
    s.torque = {};
    auto [f4, t4] = resistance(s, std::nullopt, std::nullopt);
    (void)t4;
    CHECK(f4 == Approx(5.0));

    CHECK_THROWS_AS(resistance(s, Vec3{2, 0, 0}, std::nullopt), NonUnitDirection);
}

TEST_CASE("resistance ignores force components orthogonal to the motion") {
    auto rng = seeded_rng(5, 9);
    std::normal_distribution<double> g(0.0, 2.0);
    const Vec3 dir{0, 0, 1};
    for (int i = 0; i < 100; ++i) {
        WrenchSample s;
        s.force = {g(rng), g(rng), g(rng)};
        auto [f0, tau0] = resistance(s, dir, std::nullopt);
        (void)tau0;
        s.force.x += g(rng);  // orthogonal perturbation
        s.force.y += g(rng);
        auto [f1, tau1] = resistance(s, dir, std::nullopt);
        (void)tau1;
        CHECK(f1 == Approx(f0));
        CHECK(f1 >= 0.0);
    }
}

TEST_CASE("condition templates match the skill actions") {
    auto libs = build_builtin_libraries();
    const auto& cable = *libs.at("cable");
    const auto& cap = *libs.at("cap");

    auto insert = propose_condition(cable.resolve("insert"));
    REQUIRE(insert.kind() == ConditionExpr::Kind::ResistanceForceBelow);
    CHECK(insert.threshold() == Approx(5.0));

    auto tighten = propose_condition(cap.resolve("tighten"));
    REQUIRE(tighten.kind() == ConditionExpr::Kind::ResistanceTorqueAbove);
    CHECK(tighten.threshold() == Approx(0.02));

    auto stretch = propose_condition(cable.resolve("stretch"));
    REQUIRE(stretch.kind() == ConditionExpr::Kind::ResistanceForceAbove);
    CHECK(stretch.threshold() == Approx(10.0));

    CHECK(propose_condition(cable.resolve("grasp")).kind() ==
          ConditionExpr::Kind::GripperHolding);
    CHECK(propose_condition(cable.resolve("move")).kind() == ConditionExpr::Kind::PoseReached);

    Skill odd = cable.resolve("insert");
    odd.action = "juggle";
    CHECK_THROWS_AS(propose_condition(odd), NoTemplate);
}

TEST_CASE("below-threshold grounding separates active from post") {
    // insertion-like trace: plateau 9 N while active, 1 N after
    auto tr = plateau_trace(0.0, 2.0, 9.0, 9.0, 1.0, 3.5);
    auto active = seg(0.0, 2.0);
    const double theta =
        ground_threshold(tr, active, 1.0, ThresholdDirection::Below, Channel::Force);
    CHECK(theta > 1.0 + 1e-12);
    CHECK(theta < 9.0 - 1e-12);
    // classifying every sample by theta reproduces active/post membership
    CHECK(sweep_accuracy(tr, 0.0, 2.0, 1.0, theta) == Approx(1.0));
    CHECK(sweep_accuracy(tr, 0.0, 2.0, 1.0, theta) ==
          Approx(max_sweep_accuracy(tr, 0.0, 2.0, 1.0)));
}

TEST_CASE("above-threshold grounding reproduces the tighten value") {
    // plateau 2.5 N*m with a quiet baseline; beta = 0.8 recovers 2.0
    auto tr = plateau_trace(1.0, 3.0, 2.5, 0.0, 0.0, 4.0, Channel::Torque);
    auto active = seg(1.0, 3.0);
    GroundingParams params;
    params.beta = 0.8;
    const double theta =
        ground_threshold(tr, active, 1.0, ThresholdDirection::Above, Channel::Torque, params);
    CHECK(theta == Approx(2.0).margin(0.1));
}

TEST_CASE("constant traces cannot be grounded") {
    auto tr = plateau_trace(0.0, 2.0, 4.0, 4.0, 4.0, 3.5);
    CHECK_THROWS_AS(
        ground_threshold(tr, seg(0.0, 2.0), 1.0, ThresholdDirection::Below, Channel::Force),
        NoSeparation);
    CHECK_THROWS_AS(
        ground_threshold(tr, seg(0.5, 2.0), 1.0, ThresholdDirection::Above, Channel::Force),
        NoSeparation);
}

TEST_CASE("grounded thresholds scale linearly with the trace") {
    auto rng = seeded_rng(3, 4);
    std::uniform_real_distribution<double> alpha_dist(0.1, 10.0);
    auto tr = plateau_trace(0.0, 2.0, 9.0, 9.0, 1.0, 3.5);
    const double theta =
        ground_threshold(tr, seg(0.0, 2.0), 1.0, ThresholdDirection::Below, Channel::Force);
    for (int i = 0; i < 20; ++i) {
        const double alpha = alpha_dist(rng);
        auto scaled = tr;
        for (auto& p : scaled.samples) p.f_r *= alpha;
        const double theta_scaled = ground_threshold(scaled, seg(0.0, 2.0), 1.0,
                                                     ThresholdDirection::Below, Channel::Force);
        CHECK(theta_scaled == Approx(alpha * theta).epsilon(1e-9));
    }
}

TEST_CASE("update_library replaces thresholds without touching the input") {
    auto libs = build_builtin_libraries();
    auto cable = libs.at("cable");

    auto updated = update_library(*cable, {{"insert", 2.5}, {"stretch", 9.5}});
    CHECK(updated->resolve("insert").success.threshold() == Approx(2.5));
    CHECK(updated->resolve("insert").success.kind() ==
          ConditionExpr::Kind::ResistanceForceBelow);
    CHECK(updated->resolve("stretch").success.threshold() == Approx(9.5));
    CHECK(updated->resolve("stretch").success.kind() ==
          ConditionExpr::Kind::ResistanceForceAbove);
    CHECK(std::get<double>(updated->resolve("insert").params.at("force_threshold")) ==
          Approx(2.5));

    // original untouched, other fields unchanged
    CHECK(cable->resolve("insert").success.threshold() == Approx(5.0));
    CHECK(updated->resolve("insert").status_signature == ObjectStatus::Torque);
    CHECK(updated->resolve("open_hand").success == cable->resolve("open_hand").success);

    // empty update is the identity
    auto same = update_library(*cable, {});
    CHECK(same->to_json() == cable->to_json());

    // idempotent for a fixed groundings map
    auto twice = update_library(*updated, {{"insert", 2.5}, {"stretch", 9.5}});
    CHECK(twice->to_json() == updated->to_json());

    CHECK_THROWS_AS(update_library(*cable, {{"tighten", 1.0}}), UnknownSkill);
}

TEST_CASE("wrench traces round-trip through CSV") {
    std::vector<WrenchRecord> records;
    for (int i = 0; i < 10; ++i) {
        WrenchRecord r;
        r.sample.timestamp = 0.01 * i;
        r.sample.force = {0.1 * i, -0.2 * i, 0.5};
        r.sample.torque = {0, 0.01 * i, 0};
        if (i % 2 == 0) r.lin_dir = Vec3{0, 0, -1};
        if (i % 3 == 0) r.ang_dir = Vec3{0, 0, 1};
        records.push_back(r);
    }
    std::stringstream buf;
    save_wrench_csv(records, buf);
    std::string header;
    std::getline(buf, header);
    CHECK(header == "t,fx,fy,fz,tx,ty,tz,dx,dy,dz,wx,wy,wz");
    buf.seekg(0);
    auto back = load_wrench_csv(buf);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].sample.timestamp == Approx(records[i].sample.timestamp));
        CHECK(back[i].sample.force.x == Approx(records[i].sample.force.x));
        CHECK(back[i].lin_dir.has_value() == records[i].lin_dir.has_value());
        CHECK(back[i].ang_dir.has_value() == records[i].ang_dir.has_value());
    }

    auto reduced = reduce(back);
    CHECK(reduced.samples.size() == records.size());
    for (const auto& p : reduced.samples) {
        CHECK(p.f_r >= 0.0);
        CHECK(p.tau_r >= 0.0);
    }
}
