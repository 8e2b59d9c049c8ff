#pragma once

// Object-centric skill model: the skill tuple (target object, contextual
// object, precondition, success condition, action, return) with typed
// parameters, plus the layered general -> object-specific skill library.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "demoplan/core.hpp"
#include "json.hpp"

namespace demoplan {

/// Interaction status of the target object as read from tactile data.
/// Ambiguous only appears mid-pipeline; smoothing resolves it before
/// segments are finalized.
enum class ObjectStatus { Idle, Grasped, Released, LinearForce, Torque, Ambiguous };

inline const char* to_string(ObjectStatus s) {
    switch (s) {
        case ObjectStatus::Idle: return "idle";
        case ObjectStatus::Grasped: return "grasped";
        case ObjectStatus::Released: return "released";
        case ObjectStatus::LinearForce: return "linear_force";
        case ObjectStatus::Torque: return "torque";
        case ObjectStatus::Ambiguous: return "ambiguous";
    }
    return "?";
}

inline ObjectStatus status_from_string(const std::string& s) {
    if (s == "idle") return ObjectStatus::Idle;
    if (s == "grasped") return ObjectStatus::Grasped;
    if (s == "released") return ObjectStatus::Released;
    if (s == "linear_force") return ObjectStatus::LinearForce;
    if (s == "torque") return ObjectStatus::Torque;
    if (s == "ambiguous") return ObjectStatus::Ambiguous;
    throw Error("unknown object status: " + s);
}

class UnknownSkill : public Error {
public:
    explicit UnknownSkill(const std::string& name) : Error("unknown skill: " + name) {}
};

/// Condition expression used for skill pre- and success conditions.
/// Normalized form: And lists are non-empty, Not nests at most one level,
/// thresholds are finite and non-negative.
class ConditionExpr {
public:
    enum class Kind {
        GripperHolding,
        PoseReached,
        ResistanceForceBelow,
        ResistanceForceAbove,
        ResistanceTorqueAbove,
        ResistanceTorqueBelow,
        And,
        Not,
    };

    static ConditionExpr gripper_holding(std::string object_id) {
        ConditionExpr c(Kind::GripperHolding);
        c.object_id_ = std::move(object_id);
        return c;
    }
    static ConditionExpr pose_reached(std::string pose_id, double tolerance_m) {
        check_threshold(tolerance_m, "pose tolerance");
        ConditionExpr c(Kind::PoseReached);
        c.object_id_ = std::move(pose_id);
        c.threshold_ = tolerance_m;
        return c;
    }
    static ConditionExpr force_below(double newtons) {
        check_threshold(newtons, "force threshold");
        ConditionExpr c(Kind::ResistanceForceBelow);
        c.threshold_ = newtons;
        return c;
    }
    static ConditionExpr force_above(double newtons) {
        check_threshold(newtons, "force threshold");
        ConditionExpr c(Kind::ResistanceForceAbove);
        c.threshold_ = newtons;
        return c;
    }
    static ConditionExpr torque_above(double newton_meters) {
        check_threshold(newton_meters, "torque threshold");
        ConditionExpr c(Kind::ResistanceTorqueAbove);
        c.threshold_ = newton_meters;
        return c;
    }
    static ConditionExpr torque_below(double newton_meters) {
        check_threshold(newton_meters, "torque threshold");
        ConditionExpr c(Kind::ResistanceTorqueBelow);
        c.threshold_ = newton_meters;
        return c;
    }
    static ConditionExpr all_of(std::vector<ConditionExpr> children) {
        if (children.empty()) throw Error("And condition requires at least one child");
        ConditionExpr c(Kind::And);
        c.children_ = std::move(children);
        return c;
    }
    static ConditionExpr negation(ConditionExpr inner) {
        if (inner.kind() == Kind::Not) throw Error("Not may nest at most one level");
        ConditionExpr c(Kind::Not);
        c.children_.push_back(std::move(inner));
        return c;
    }

    Kind kind() const { return kind_; }
    const std::string& object_id() const { return object_id_; }
    double threshold() const { return threshold_; }
    const std::vector<ConditionExpr>& children() const { return children_; }
    const ConditionExpr& inner() const { return children_.at(0); }

    bool is_resistance() const {
        return kind_ == Kind::ResistanceForceBelow || kind_ == Kind::ResistanceForceAbove ||
               kind_ == Kind::ResistanceTorqueAbove || kind_ == Kind::ResistanceTorqueBelow;
    }

    /// First resistance condition in the tree, if any (library skills hold
    /// at most one).
    const ConditionExpr* find_resistance() const {
        if (is_resistance()) return this;
        for (const auto& c : children_)
            if (const auto* r = c.find_resistance()) return r;
        return nullptr;
    }

    /// Rebuilds the expression with every resistance threshold replaced.
    ConditionExpr with_threshold(double value) const {
        ConditionExpr out = *this;
        if (out.is_resistance()) {
            check_threshold(value, "threshold");
            out.threshold_ = value;
        }
        for (auto& c : out.children_) c = c.with_threshold(value);
        return out;
    }

    /// Whether a gripper in the given state could satisfy this condition.
    /// Only gripper literals constrain the answer; everything else is
    /// assumed satisfiable.
    bool compatible_with_holding(bool holding) const {
        switch (kind_) {
            case Kind::GripperHolding: return holding;
            case Kind::Not:
                if (inner().kind() == Kind::GripperHolding) return !holding;
                return true;
            case Kind::And:
                for (const auto& c : children_)
                    if (!c.compatible_with_holding(holding)) return false;
                return true;
            default: return true;
        }
    }

    bool operator==(const ConditionExpr& o) const {
        return kind_ == o.kind_ && object_id_ == o.object_id_ &&
               threshold_ == o.threshold_ && children_ == o.children_;
    }

    nlohmann::json to_json() const;
    static ConditionExpr from_json(const nlohmann::json& j);

private:
    explicit ConditionExpr(Kind k) : kind_(k) {}

    static void check_threshold(double v, const char* what) {
        if (!std::isfinite(v) || v < 0.0)
            throw Error(std::string(what) + " must be finite and non-negative");
    }

    Kind kind_;
    std::string object_id_;  // held object for GripperHolding, pose id for PoseReached
    double threshold_ = 0.0;
    std::vector<ConditionExpr> children_;
};

inline const char* to_string(ConditionExpr::Kind k) {
    using K = ConditionExpr::Kind;
    switch (k) {
        case K::GripperHolding: return "gripper_holding";
        case K::PoseReached: return "pose_reached";
        case K::ResistanceForceBelow: return "resistance_force_below";
        case K::ResistanceForceAbove: return "resistance_force_above";
        case K::ResistanceTorqueAbove: return "resistance_torque_above";
        case K::ResistanceTorqueBelow: return "resistance_torque_below";
        case K::And: return "and";
        case K::Not: return "not";
    }
    return "?";
}

inline nlohmann::json ConditionExpr::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    switch (kind_) {
        case Kind::GripperHolding: j["object"] = object_id_; break;
        case Kind::PoseReached:
            j["pose"] = object_id_;
            j["tolerance"] = threshold_;
            break;
        case Kind::And: {
            auto arr = nlohmann::json::array();
            for (const auto& c : children_) arr.push_back(c.to_json());
            j["children"] = arr;
            break;
        }
        case Kind::Not: j["child"] = inner().to_json(); break;
        default: j["threshold"] = threshold_; break;
    }
    return j;
}

inline ConditionExpr ConditionExpr::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    if (kind == "gripper_holding") return gripper_holding(j.at("object"));
    if (kind == "pose_reached") return pose_reached(j.at("pose"), j.at("tolerance"));
    if (kind == "resistance_force_below") return force_below(j.at("threshold"));
    if (kind == "resistance_force_above") return force_above(j.at("threshold"));
    if (kind == "resistance_torque_above") return torque_above(j.at("threshold"));
    if (kind == "resistance_torque_below") return torque_below(j.at("threshold"));
    if (kind == "and") {
        std::vector<ConditionExpr> cs;
        for (const auto& c : j.at("children")) cs.push_back(from_json(c));
        return all_of(std::move(cs));
    }
    if (kind == "not") return negation(from_json(j.at("child")));
    throw Error("unknown condition kind: " + kind);
}

/// Typed skill parameter: numeric (thresholds, tolerances) or symbolic
/// (pose ids, direction tokens).
using ParamValue = std::variant<double, std::string>;

inline nlohmann::json param_to_json(const ParamValue& v) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    return std::get<std::string>(v);
}

inline ParamValue param_from_json(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    return j.get<std::string>();
}

/// Runtime return of one skill execution: success, or an error code such
/// as "torque_limit".
struct SkillReturn {
    bool ok = true;
    std::string error_code;

    static SkillReturn success() { return {true, {}}; }
    static SkillReturn error(std::string code) { return {false, std::move(code)}; }
};

/// One skill in the library. The target object class is what the robot
/// manipulates directly; the optional env slot names the class of object
/// it interacts with (cable -> clip). status_signature is the tactile
/// status expected while the skill executes, which lets the deterministic
/// reasoner invert observed statuses back to skills.
struct Skill {
    std::string name;
    std::string target_class;                 // O_t
    std::optional<std::string> env_slot;      // O_e class, if the skill takes one
    std::string action;                       // opaque action id for the executor
    ConditionExpr pre;                        // C_p
    ConditionExpr success;                    // C_s
    std::map<std::string, ParamValue> params; // P
    ObjectStatus status_signature = ObjectStatus::Idle;

    void validate() const {
        if (status_signature == ObjectStatus::Ambiguous)
            throw Error("skill " + name + ": Ambiguous is not a valid status signature");
        if (const auto* r = success.find_resistance()) {
            (void)r;
            if (!params.count(threshold_key()))
                throw Error("skill " + name + ": success threshold has no matching param '" +
                            threshold_key() + "'");
        }
    }

    /// Param key mirroring the success-condition threshold, when one exists.
    std::string threshold_key() const {
        const auto* r = success.find_resistance();
        if (!r) return {};
        const bool torque = r->kind() == ConditionExpr::Kind::ResistanceTorqueAbove ||
                            r->kind() == ConditionExpr::Kind::ResistanceTorqueBelow;
        return torque ? "torque_threshold" : "force_threshold";
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["target_class"] = target_class;
        j["env_class"] = env_slot ? nlohmann::json(*env_slot) : nlohmann::json();
        j["action"] = action;
        j["pre"] = pre.to_json();
        j["success"] = success.to_json();
        j["status_signature"] = to_string(status_signature);
        auto p = nlohmann::json::object();
        for (const auto& [k, v] : params) p[k] = param_to_json(v);
        j["params"] = p;
        return j;
    }

    static Skill from_json(const nlohmann::json& j) {
        Skill s{j.at("name"), j.at("target_class"), std::nullopt, j.at("action"),
                ConditionExpr::from_json(j.at("pre")),
                ConditionExpr::from_json(j.at("success")),
                {}, status_from_string(j.at("status_signature"))};
        if (!j.at("env_class").is_null()) s.env_slot = j.at("env_class").get<std::string>();
        for (const auto& [k, v] : j.at("params").items()) s.params.emplace(k, param_from_json(v));
        s.validate();
        return s;
    }
};

/// Layered skill library: lookups resolve child-first, then through the
/// parent chain (general skills shadowed by object-specific ones).
class SkillLibrary {
public:
    SkillLibrary(std::string object_class, std::shared_ptr<const SkillLibrary> parent,
                 std::vector<Skill> skills)
        : object_class_(std::move(object_class)),
          parent_(std::move(parent)),
          skills_(std::move(skills)) {
        for (std::size_t i = 0; i < skills_.size(); ++i) {
            skills_[i].validate();
            for (std::size_t k = i + 1; k < skills_.size(); ++k)
                if (skills_[i].name == skills_[k].name)
                    throw Error("duplicate skill name in library: " + skills_[i].name);
        }
    }

    const std::string& object_class() const { return object_class_; }
    const std::shared_ptr<const SkillLibrary>& parent() const { return parent_; }
    const std::vector<Skill>& own_skills() const { return skills_; }

    const Skill* try_resolve(const std::string& name) const {
        for (const auto& s : skills_)
            if (s.name == name) return &s;
        return parent_ ? parent_->try_resolve(name) : nullptr;
    }

    const Skill& resolve(const std::string& name) const {
        if (const Skill* s = try_resolve(name)) return *s;
        throw UnknownSkill(name);
    }

    /// All resolvable skills in deterministic order: own skills first,
    /// then unshadowed parent skills.
    std::vector<const Skill*> all_skills() const {
        std::vector<const Skill*> out;
        collect(out);
        return out;
    }

    /// Skills whose status signature matches and whose precondition a
    /// gripper in the given state could satisfy.
    std::vector<const Skill*> find_by_signature(ObjectStatus status, bool holding) const {
        std::vector<const Skill*> out;
        for (const Skill* s : all_skills())
            if (s->status_signature == status && s->pre.compatible_with_holding(holding))
                out.push_back(s);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["object_class"] = object_class_;
        j["parent"] = parent_ ? parent_->to_json() : nlohmann::json();
        auto arr = nlohmann::json::array();
        for (const auto& s : skills_) arr.push_back(s.to_json());
        j["skills"] = arr;
        return j;
    }

    static std::shared_ptr<const SkillLibrary> from_json(const nlohmann::json& j) {
        std::shared_ptr<const SkillLibrary> parent;
        if (!j.at("parent").is_null()) parent = from_json(j.at("parent"));
        std::vector<Skill> skills;
        for (const auto& s : j.at("skills")) skills.push_back(Skill::from_json(s));
        return std::make_shared<SkillLibrary>(j.at("object_class"), parent, std::move(skills));
    }

private:
    void collect(std::vector<const Skill*>& out) const {
        for (const auto& s : skills_) {
            bool shadowed = false;
            for (const Skill* seen : out)
                if (seen->name == s.name) shadowed = true;
            if (!shadowed) out.push_back(&s);
        }
        if (parent_) parent_->collect(out);
    }

    std::string object_class_;
    std::shared_ptr<const SkillLibrary> parent_;
    std::vector<Skill> skills_;
};

namespace detail {

inline Skill make_skill(std::string name, std::string target, std::optional<std::string> env,
                        std::string action, ConditionExpr pre, ConditionExpr success,
                        std::map<std::string, ParamValue> params, ObjectStatus sig) {
    Skill s{std::move(name), std::move(target), std::move(env), std::move(action),
            std::move(pre), std::move(success), std::move(params), sig};
    s.validate();
    return s;
}

}  // namespace detail

/// Builds the general library plus the cable and cap object libraries.
/// Thresholds are the initial, pre-grounding values; demonstration
/// grounding later replaces them.
inline std::map<std::string, std::shared_ptr<const SkillLibrary>> build_builtin_libraries() {
    using CE = ConditionExpr;
    const std::string target = "target";  // slot id resolved to the bound O_t

    std::vector<Skill> general;
    general.push_back(detail::make_skill(
        "move", "object", std::nullopt, "move",
        CE::negation(CE::gripper_holding(target)),
        CE::pose_reached("goal_pose", 0.01),
        {{"pose", std::string("goal_pose")}, {"tolerance", 0.01}}, ObjectStatus::Idle));
    general.push_back(detail::make_skill(
        "grasp", "object", std::nullopt, "grasp",
        CE::negation(CE::gripper_holding(target)),
        CE::gripper_holding(target), {}, ObjectStatus::Grasped));
    auto general_lib =
        std::make_shared<SkillLibrary>("object", nullptr, std::move(general));

    // Cable task is bimanual: a leader arm carries the cable while the
    // instrumented follower approaches, grasps at the clip, stretches and
    // inserts. move_object therefore presumes the cable is already held.
    std::vector<Skill> cable;
    cable.push_back(detail::make_skill(
        "move_object", "cable", std::string("clip"), "move_object",
        CE::gripper_holding(target),
        CE::pose_reached("env_pose", 0.02),
        {{"pose", std::string("env_pose")}, {"tolerance", 0.02}}, ObjectStatus::Idle));
    cable.push_back(detail::make_skill(
        "stretch", "cable", std::nullopt, "stretch",
        CE::gripper_holding(target),
        CE::force_above(10.0), {{"force_threshold", 10.0}}, ObjectStatus::LinearForce));
    cable.push_back(detail::make_skill(
        "insert", "cable", std::string("clip"), "insert",
        CE::gripper_holding(target),
        CE::force_below(5.0),
        {{"force_threshold", 5.0}, {"direction", std::string("downward")}},
        ObjectStatus::Torque));
    cable.push_back(detail::make_skill(
        "open_hand", "cable", std::nullopt, "open_hand",
        CE::gripper_holding(target),
        CE::negation(CE::gripper_holding(target)), {}, ObjectStatus::Released));
    auto cable_lib =
        std::make_shared<SkillLibrary>("cable", general_lib, std::move(cable));

    std::vector<Skill> cap;
    cap.push_back(detail::make_skill(
        "move_object", "cap", std::string("cap"), "move_object",
        CE::negation(CE::gripper_holding(target)),
        CE::pose_reached("env_pose", 0.02),
        {{"pose", std::string("env_pose")}, {"tolerance", 0.02}}, ObjectStatus::Idle));
    cap.push_back(detail::make_skill(
        "press", "cap", std::nullopt, "press",
        CE::gripper_holding(target),
        CE::force_above(10.0), {{"force_threshold", 10.0}}, ObjectStatus::LinearForce));
    cap.push_back(detail::make_skill(
        "tighten", "cap", std::string("bottle"), "tighten",
        CE::gripper_holding(target),
        CE::torque_above(0.02), {{"torque_threshold", 0.02}}, ObjectStatus::Torque));
    cap.push_back(detail::make_skill(
        "release", "cap", std::nullopt, "release",
        CE::gripper_holding(target),
        CE::negation(CE::gripper_holding(target)), {}, ObjectStatus::Released));
    auto cap_lib = std::make_shared<SkillLibrary>("cap", general_lib, std::move(cap));

    return {{"object", general_lib}, {"cable", cable_lib}, {"cap", cap_lib}};
}

}  // namespace demoplan
