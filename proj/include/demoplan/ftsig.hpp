#pragma once

// Force/torque signal reduction and condition grounding: collapses 6-D
// wrench traces to the scalar resistance force f_r and torque tau_r
// opposing the commanded motion, proposes initial success conditions per
// skill, and fits thresholds from demonstration segments by quantile gap.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "demoplan/core.hpp"
#include "demoplan/skill.hpp"
#include "demoplan/tactile.hpp"

namespace demoplan::ftsig {

class NonUnitDirection : public Error {
public:
    NonUnitDirection() : Error("motion direction must be a unit vector") {}
};

class NoSeparation : public Error {
public:
    explicit NoSeparation(const std::string& why)
        : Error("cannot ground threshold, no separation: " + why) {}
};

class NoTemplate : public Error {
public:
    explicit NoTemplate(const std::string& action)
        : Error("no success-condition template for action: " + action) {}
};

struct WrenchSample {
    Vec3 force;   // newtons
    Vec3 torque;  // newton-meters
    double timestamp = 0.0;
};

/// Wrench sample plus the commanded motion context; the direction vectors
/// are absent when no motion is commanded on that channel.
struct WrenchRecord {
    WrenchSample sample;
    std::optional<Vec3> lin_dir;  // unit vector of commanded translation
    std::optional<Vec3> ang_dir;  // unit vector of commanded rotation
};

/// Resistance is the wrench component opposing the commanded motion,
/// clamped at zero. Without a motion context the magnitude is used.
inline std::pair<double, double> resistance(const WrenchSample& s,
                                            const std::optional<Vec3>& lin_dir,
                                            const std::optional<Vec3>& ang_dir) {
    if (lin_dir && !lin_dir->is_unit()) throw NonUnitDirection();
    if (ang_dir && !ang_dir->is_unit()) throw NonUnitDirection();
    const double f_r = lin_dir ? std::max(0.0, -s.force.dot(*lin_dir)) : s.force.norm();
    const double tau_r = ang_dir ? std::max(0.0, -s.torque.dot(*ang_dir)) : s.torque.norm();
    return {f_r, tau_r};
}

struct ResistancePoint {
    double t = 0.0;
    double f_r = 0.0;    // newtons
    double tau_r = 0.0;  // newton-meters
};

struct ResistanceTrace {
    std::vector<ResistancePoint> samples;

    void validate() const {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].f_r < 0 || samples[i].tau_r < 0)
                throw Error("resistance values must be non-negative");
            if (i > 0 && samples[i].t <= samples[i - 1].t)
                throw Error("resistance timestamps must be strictly increasing");
        }
    }
};

inline ResistanceTrace reduce(const std::vector<WrenchRecord>& records) {
    ResistanceTrace trace;
    trace.samples.reserve(records.size());
    for (const auto& r : records) {
        auto [f, tau] = resistance(r.sample, r.lin_dir, r.ang_dir);
        trace.samples.push_back({r.sample.timestamp, f, tau});
    }
    trace.validate();
    return trace;
}

// ---------------------------------------------------------------------------
// CSV I/O. Header: t,fx,fy,fz,tx,ty,tz,dx,dy,dz,wx,wy,wz with the direction
// columns left empty when no motion is commanded.

inline void save_wrench_csv(const std::vector<WrenchRecord>& records, std::ostream& out) {
    out << "t,fx,fy,fz,tx,ty,tz,dx,dy,dz,wx,wy,wz\n";
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        return std::string(buf);
    };
    for (const auto& r : records) {
        out << num(r.sample.timestamp) << "," << num(r.sample.force.x) << ","
            << num(r.sample.force.y) << "," << num(r.sample.force.z) << ","
            << num(r.sample.torque.x) << "," << num(r.sample.torque.y) << ","
            << num(r.sample.torque.z) << ",";
        if (r.lin_dir)
            out << num(r.lin_dir->x) << "," << num(r.lin_dir->y) << "," << num(r.lin_dir->z);
        else
            out << ",,";
        out << ",";
        if (r.ang_dir)
            out << num(r.ang_dir->x) << "," << num(r.ang_dir->y) << "," << num(r.ang_dir->z);
        else
            out << ",,";
        out << "\n";
    }
}

inline void save_wrench_csv(const std::vector<WrenchRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out.good()) throw Error("cannot write wrench file: " + path);
    save_wrench_csv(records, out);
}

inline std::vector<WrenchRecord> load_wrench_csv(std::istream& in) {
    std::vector<WrenchRecord> out;
    std::string line;
    if (!std::getline(in, line)) return out;  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        cells.resize(13);
        auto f = [&](std::size_t i) { return cells[i].empty() ? 0.0 : std::stod(cells[i]); };
        WrenchRecord r;
        r.sample.timestamp = f(0);
        r.sample.force = {f(1), f(2), f(3)};
        r.sample.torque = {f(4), f(5), f(6)};
        if (!cells[7].empty() || !cells[8].empty() || !cells[9].empty())
            r.lin_dir = Vec3{f(7), f(8), f(9)};
        if (!cells[10].empty() || !cells[11].empty() || !cells[12].empty())
            r.ang_dir = Vec3{f(10), f(11), f(12)};
        out.push_back(r);
    }
    return out;
}

inline std::vector<WrenchRecord> load_wrench_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error("cannot read wrench file: " + path);
    return load_wrench_csv(in);
}

// ---------------------------------------------------------------------------
// Condition proposal and threshold grounding

/// Deterministic template standing in for the initial, prior-knowledge
/// condition generation. Initial thresholds come from the skill's stored
/// parameters.
inline ConditionExpr propose_condition(const Skill& skill) {
    auto threshold = [&](const char* key) {
        auto it = skill.params.find(key);
        if (it == skill.params.end() || !std::holds_alternative<double>(it->second))
            throw NoTemplate(skill.action + " (missing " + key + " param)");
        return std::get<double>(it->second);
    };
    if (skill.action == "insert") return ConditionExpr::force_below(threshold("force_threshold"));
    if (skill.action == "stretch" || skill.action == "press" || skill.action == "push")
        return ConditionExpr::force_above(threshold("force_threshold"));
    if (skill.action == "tighten")
        return ConditionExpr::torque_above(threshold("torque_threshold"));
    if (skill.action == "grasp") return ConditionExpr::gripper_holding("target");
    if (skill.action == "move" || skill.action == "move_object")
        return ConditionExpr::pose_reached("goal_pose", 0.01);
    if (skill.action == "release" || skill.action == "open_hand")
        return ConditionExpr::negation(ConditionExpr::gripper_holding("target"));
    throw NoTemplate(skill.action);
}

enum class Channel { Force, Torque };
enum class ThresholdDirection { Below, Above };

struct GroundingParams {
    double rho = 0.3;    // active-tail fraction
    double gamma = 0.25; // Below: fraction of the gap above the post level
    double beta = 0.9;   // Above: fraction of the active-tail level
};

/// Fits a success threshold from one demonstration segment.
///
/// Below (losing contact, e.g. insertion): the threshold sits gamma of the
/// way from the post-window level up to the active-tail level. Above
/// (building resistance, e.g. stretch/tighten): beta times the active-tail
/// level, provided the tail separates from the pre-active baseline.
inline double ground_threshold(const ResistanceTrace& trace, const tactile::Segment& active,
                               double post_window, ThresholdDirection direction, Channel channel,
                               const GroundingParams& params = {}) {
    trace.validate();
    auto value = [&](const ResistancePoint& p) {
        return channel == Channel::Force ? p.f_r : p.tau_r;
    };

    const double dur = active.t_end - active.t_start;
    if (dur <= 0) throw Error("active segment has non-positive duration");
    const double tail_start = active.t_end - params.rho * dur;

    std::vector<double> tail;
    std::vector<double> reference;
    for (const auto& p : trace.samples) {
        if (p.t >= tail_start && p.t <= active.t_end) tail.push_back(value(p));
        if (direction == ThresholdDirection::Below) {
            if (p.t > active.t_end && p.t <= active.t_end + post_window)
                reference.push_back(value(p));
        } else {
            if (p.t >= active.t_start - params.rho * dur && p.t < active.t_start)
                reference.push_back(value(p));
        }
    }
    if (tail.empty())
        throw Error("trace does not cover the active segment tail");
    if (reference.empty())
        throw Error(direction == ThresholdDirection::Below
                        ? "trace does not cover the post window"
                        : "trace does not cover the pre-active baseline");

    const double q10_tail = quantile(tail, 0.10);
    const double q90_ref = quantile(reference, 0.90);
    if (!(q10_tail > q90_ref))
        throw NoSeparation("active tail q10 <= reference q90 (" + std::to_string(q10_tail) +
                           " vs " + std::to_string(q90_ref) + ")");

    if (direction == ThresholdDirection::Below)
        return q90_ref + params.gamma * (q10_tail - q90_ref);
    return params.beta * q10_tail;
}

/// Returns a new library with the named skills' success-condition
/// thresholds replaced (and the mirrored parameter kept in sync). The
/// input library is untouched; grounding a skill defined only in the
/// parent adds a shadowing copy at the child level.
inline std::shared_ptr<const SkillLibrary> update_library(
    const SkillLibrary& lib, const std::map<std::string, double>& groundings) {
    for (const auto& [name, theta] : groundings) {
        (void)theta;
        lib.resolve(name);  // throws UnknownSkill
    }
    std::vector<Skill> skills = lib.own_skills();
    auto apply = [](Skill& s, double theta) {
        s.success = s.success.with_threshold(theta);
        const std::string key = s.threshold_key();
        if (!key.empty()) s.params[key] = theta;
    };
    for (auto& s : skills) {
        auto it = groundings.find(s.name);
        if (it != groundings.end()) apply(s, it->second);
    }
    for (const auto& [name, theta] : groundings) {
        bool own = false;
        for (const auto& s : lib.own_skills()) own |= s.name == name;
        if (!own) {
            Skill copy = lib.resolve(name);
            apply(copy, theta);
            skills.push_back(std::move(copy));
        }
    }
    return std::make_shared<SkillLibrary>(lib.object_class(), lib.parent(), std::move(skills));
}

}  // namespace demoplan::ftsig
