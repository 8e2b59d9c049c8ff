#pragma once

// Bootstrapped demonstration analysis: annotates keyframes at segment
// boundaries with scene data and object status, infers the demonstrated
// skill sequence through a pluggable reasoner backend (deterministic rules
// or a remote chat-completions service), grounds success-condition
// thresholds from the F/T trace, and assembles the demonstration task plan.

#include <cstdlib>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "demoplan/core.hpp"
#include "demoplan/ftsig.hpp"
#include "demoplan/pddl.hpp"
#include "demoplan/skill.hpp"
#include "demoplan/tactile.hpp"
#include "json.hpp"

namespace demoplan::analyzer {

class CoverageGap : public Error {
public:
    explicit CoverageGap(double t)
        : Error("scene annotations do not cover key timestamp " + std::to_string(t)) {}
};

class NoMatchingSkill : public Error {
public:
    NoMatchingSkill(ObjectStatus s, bool holding)
        : Error(std::string("no skill matches status ") + to_string(s) +
                (holding ? " while holding" : " with a free hand")) {}
};

class TranscriptParseError : public Error {
public:
    TranscriptParseError(int line, const std::string& why)
        : Error("transcript parse error at line " + std::to_string(line) + ": " + why),
          line(line) {}
    int line;
};

class RemoteUnavailable : public Error {
public:
    explicit RemoteUnavailable(const std::string& why)
        : Error("remote reasoner unavailable: " + why) {}
};

// ---------------------------------------------------------------------------
// Scene annotations and demonstration records

struct SceneObject {
    std::string id;
    std::string object_class;  // clip_U, clip_C, cap_inner, cap_outer, bottle
    Vec3 position;
    std::optional<Vec3> opening_direction;

    nlohmann::json to_json() const {
        nlohmann::json j{{"id", id},
                         {"class", object_class},
                         {"position", {position.x, position.y, position.z}}};
        if (opening_direction)
            j["opening_direction"] = {opening_direction->x, opening_direction->y,
                                      opening_direction->z};
        return j;
    }
    static SceneObject from_json(const nlohmann::json& j) {
        SceneObject o;
        o.id = j.at("id");
        o.object_class = j.at("class");
        o.position = {j.at("position")[0], j.at("position")[1], j.at("position")[2]};
        if (j.contains("opening_direction"))
            o.opening_direction = Vec3{j["opening_direction"][0], j["opening_direction"][1],
                                       j["opening_direction"][2]};
        return o;
    }
};

struct SceneAnnotation {
    double t = 0.0;
    Vec3 ee_position;
    bool holding = false;
    std::vector<SceneObject> objects;

    nlohmann::json to_json() const {
        auto objs = nlohmann::json::array();
        for (const auto& o : objects) objs.push_back(o.to_json());
        return {{"t", t},
                {"ee", {ee_position.x, ee_position.y, ee_position.z}},
                {"holding", holding},
                {"objects", objs}};
    }
    static SceneAnnotation from_json(const nlohmann::json& j) {
        SceneAnnotation a;
        a.t = j.at("t");
        a.ee_position = {j.at("ee")[0], j.at("ee")[1], j.at("ee")[2]};
        a.holding = j.at("holding");
        for (const auto& o : j.at("objects")) a.objects.push_back(SceneObject::from_json(o));
        return a;
    }
};

/// One demonstration: time-aligned tactile sequence, wrench trace and
/// scene-annotation stream. target_id names the manipulated object when it
/// is not itself a scene object (the cable, pre-held by the leader arm);
/// it is empty when targets are scene objects (the caps).
struct DemoRecord {
    std::string task;  // cable_mounting | cap_tightening
    std::string task_description;
    std::string target_id;
    tactile::TactileSequence tactile;
    std::vector<ftsig::WrenchRecord> wrench;
    std::vector<SceneAnnotation> annotations;
};

/// Writes demo.json plus the referenced tactile JSONL and wrench CSV files.
inline void save_demo(const DemoRecord& demo, const std::string& dir,
                      const std::string& stem = "demo") {
    tactile::save_jsonl(demo.tactile, dir + "/" + stem + "_tactile.jsonl");
    ftsig::save_wrench_csv(demo.wrench, dir + "/" + stem + "_wrench.csv");
    nlohmann::json j;
    j["task"] = demo.task;
    j["task_description"] = demo.task_description;
    j["target_id"] = demo.target_id;
    j["tactile_file"] = stem + "_tactile.jsonl";
    j["wrench_file"] = stem + "_wrench.csv";
    auto arr = nlohmann::json::array();
    for (const auto& a : demo.annotations) arr.push_back(a.to_json());
    j["annotations"] = arr;
    std::ofstream out(dir + "/" + stem + ".json");
    if (!out.good()) throw Error("cannot write demo record to " + dir);
    out << j.dump(2) << "\n";
}

inline DemoRecord load_demo(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error("cannot read demo record: " + path);
    nlohmann::json j;
    in >> j;
    DemoRecord demo;
    demo.task = j.at("task");
    demo.task_description = j.at("task_description");
    demo.target_id = j.at("target_id");
    for (const auto& a : j.at("annotations"))
        demo.annotations.push_back(SceneAnnotation::from_json(a));
    const auto slash = path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
    demo.tactile = tactile::load_jsonl_file(dir + "/" + j.at("tactile_file").get<std::string>());
    demo.wrench = ftsig::load_wrench_csv_file(dir + "/" + j.at("wrench_file").get<std::string>());
    return demo;
}

// ---------------------------------------------------------------------------
// Keyframes

/// Scene snapshot at a key timestamp. status is absent only in the
/// ablation configurations that strip object-status annotations.
struct KeyFrame {
    double timestamp = 0.0;
    std::optional<ObjectStatus> status;
    SceneAnnotation scene;
    std::string caption;
};

/// One keyframe per segment, sampled from the annotation stream at the
/// segment's key timestamp (nearest sample).
inline std::vector<KeyFrame> annotate_keyframes(const DemoRecord& demo,
                                                const std::vector<tactile::Segment>& segments) {
    if (demo.annotations.empty()) throw CoverageGap(0.0);
    const double eps = 1e-9;
    std::vector<KeyFrame> out;
    for (const auto& seg : segments) {
        const double t = seg.key_timestamp;
        if (t < demo.annotations.front().t - eps || t > demo.annotations.back().t + eps)
            throw CoverageGap(t);
        const SceneAnnotation* best = &demo.annotations.front();
        for (const auto& a : demo.annotations)
            if (std::abs(a.t - t) < std::abs(best->t - t)) best = &a;
        KeyFrame kf;
        kf.timestamp = t;
        kf.status = seg.status;
        kf.scene = *best;
        std::string objs;
        for (const auto& o : best->objects)
            objs += (objs.empty() ? "" : ", ") + o.id + " (" + o.object_class + ")";
        kf.caption = "status: " + std::string(to_string(seg.status)) +
                     "; holding: " + (best->holding ? "yes" : "no") + "; objects: " + objs;
        out.push_back(std::move(kf));
    }
    return out;
}

/// Uniformly sampled keyframes over the demonstration, without statuses
/// (ablation group B).
inline std::vector<KeyFrame> uniform_keyframes(const DemoRecord& demo, int count = 8) {
    if (demo.annotations.empty() || count < 1) throw CoverageGap(0.0);
    const double t0 = demo.annotations.front().t;
    const double t1 = demo.annotations.back().t;
    std::vector<KeyFrame> out;
    for (int i = 0; i < count; ++i) {
        const double t = count > 1 ? t0 + (t1 - t0) * i / (count - 1) : t0;
        const SceneAnnotation* best = &demo.annotations.front();
        for (const auto& a : demo.annotations)
            if (std::abs(a.t - t) < std::abs(best->t - t)) best = &a;
        KeyFrame kf;
        kf.timestamp = t;
        kf.scene = *best;
        kf.caption = "holding: " + std::string(best->holding ? "yes" : "no");
        out.push_back(std::move(kf));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Skill steps

/// One grounded step of a task plan: a skill with its bound target,
/// contextual object and parameter values, plus the reasoning behind it.
struct SkillStep {
    std::string skill;
    std::string target;              // bound O_t instance
    std::optional<std::string> env;  // bound O_e instance
    std::map<std::string, ParamValue> params;
    std::string reason;

    bool same_binding(const SkillStep& o) const {
        return skill == o.skill && target == o.target && env == o.env && params == o.params;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"skill", skill}, {"target", target}, {"reason", reason}};
        j["env"] = env ? nlohmann::json(*env) : nlohmann::json();
        auto p = nlohmann::json::object();
        for (const auto& [k, v] : params) p[k] = param_to_json(v);
        j["params"] = p;
        return j;
    }
    static SkillStep from_json(const nlohmann::json& j) {
        SkillStep s;
        s.skill = j.at("skill");
        s.target = j.at("target");
        s.reason = j.at("reason");
        if (!j.at("env").is_null()) s.env = j.at("env").get<std::string>();
        for (const auto& [k, v] : j.at("params").items()) s.params.emplace(k, param_from_json(v));
        return s;
    }
};

/// Collapses consecutive steps with identical bindings into one (the
/// first occurrence's reason is kept).
inline std::vector<SkillStep> collapse_steps(const std::vector<SkillStep>& steps) {
    std::vector<SkillStep> out;
    for (const auto& s : steps)
        if (out.empty() || !out.back().same_binding(s)) out.push_back(s);
    return out;
}

/// Maps a plan step onto the ground action of the translated domain.
/// Argument order mirrors the translation scheme: target, direction,
/// contextual object, pose.
inline pddl::GroundAction step_to_ground_action(const Skill& skill, const SkillStep& step) {
    pddl::GroundAction ga;
    ga.action = skill.name;
    ga.args.push_back(step.target);
    if (skill.params.count("direction")) {
        auto it = step.params.find("direction");
        ga.args.push_back(it != step.params.end() && std::holds_alternative<std::string>(it->second)
                              ? std::get<std::string>(it->second)
                              : std::get<std::string>(skill.params.at("direction")));
    }
    if (skill.env_slot) ga.args.push_back(step.env.value_or(""));
    if (skill.params.count("pose")) {
        auto it = step.params.find("pose");
        ga.args.push_back(it != step.params.end() && std::holds_alternative<std::string>(it->second)
                              ? std::get<std::string>(it->second)
                              : "p_" + step.env.value_or(step.target));
    }
    return ga;
}

// ---------------------------------------------------------------------------
// Rule-based reasoner

struct InferenceParams {
    double min_displacement = 0.02;  // meters; motion evidence floor
    double accept_radius = 0.10;     // meters; contextual-object binding radius
};

/// A step together with the keyframe span that produced it.
struct InferredStep {
    SkillStep step;
    std::size_t kf_begin = 0;
    std::size_t kf_end = 0;  // inclusive
};

namespace detail {

inline bool class_matches(const std::string& object_class, const std::string& slot) {
    return object_class.rfind(slot, 0) == 0;  // slot is a class prefix (clip -> clip_U)
}

/// The manipulated object instance at this keyframe: the nearest scene
/// object of the library's target class, or the library class itself when
/// the target is not a scene object (the cable).
inline std::string bind_target(const KeyFrame& kf, const SkillLibrary& lib) {
    const SceneObject* best = nullptr;
    for (const auto& o : kf.scene.objects) {
        if (!class_matches(o.object_class, lib.object_class())) continue;
        if (!best || distance(kf.scene.ee_position, o.position) <
                         distance(kf.scene.ee_position, best->position))
            best = &o;
    }
    return best ? best->id : lib.object_class();
}

/// Nearest scene object matching the skill's contextual slot, excluding
/// the bound target instance.
inline const SceneObject* bind_env(const KeyFrame& kf, const Skill& skill,
                                   const std::string& target, double accept_radius) {
    if (!skill.env_slot) return nullptr;
    const SceneObject* best = nullptr;
    for (const auto& o : kf.scene.objects) {
        if (o.id == target || !class_matches(o.object_class, *skill.env_slot)) continue;
        if (!best || distance(kf.scene.ee_position, o.position) <
                         distance(kf.scene.ee_position, best->position))
            best = &o;
    }
    if (best && distance(kf.scene.ee_position, best->position) > accept_radius) return nullptr;
    return best;
}

}  // namespace detail

/// Deterministic replacement for the language-model skill reasoner. Motion
/// toward an object explains idle frames (move/move_object); the object
/// status explains the contact skills: Grasped -> grasp, LinearForce ->
/// the library's linear-force skill, Torque -> the library's torque skill
/// with the nearest contextual object, Released -> open_hand/release.
/// Consecutive identical inferences collapse into one step.
inline std::vector<InferredStep> infer_steps_detailed(const pddl::PddlDomain& domain,
                                                      const SkillLibrary& lib,
                                                      const std::vector<KeyFrame>& keyframes,
                                                      const std::string& task_description,
                                                      const InferenceParams& params = {}) {
    (void)task_description;
    if (keyframes.empty()) throw Error("no keyframes to reason about");

    std::vector<InferredStep> raw;
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        const KeyFrame& kf = keyframes[i];
        const std::string target = detail::bind_target(kf, lib);
        const bool holding = kf.scene.holding;

        auto push = [&](const Skill& skill, std::optional<std::string> env, std::string reason) {
            if (!domain.find_action(skill.name))
                throw Error("inferred skill " + skill.name + " is not a domain action");
            SkillStep step;
            step.skill = skill.name;
            step.target = target;
            step.env = std::move(env);
            if (skill.params.count("direction"))
                step.params["direction"] = skill.params.at("direction");
            if (skill.params.count("pose"))
                step.params["pose"] = "p_" + step.env.value_or(step.target);
            step.reason = std::move(reason);
            raw.push_back({std::move(step), i, i});
        };

        const ObjectStatus status = kf.status.value_or(ObjectStatus::Idle);
        const bool annotated = kf.status.has_value();

        if (status == ObjectStatus::Idle || status == ObjectStatus::Ambiguous) {
            // Motion evidence: end-effector displacement toward an object
            // since this keyframe, read at the next one.
            const Vec3 here = kf.scene.ee_position;
            const Vec3 next = i + 1 < keyframes.size() ? keyframes[i + 1].scene.ee_position : here;
            if ((next - here).norm() < params.min_displacement) continue;
            const Skill* mover = lib.try_resolve("move_object");
            if (!mover) mover = lib.try_resolve("move");
            if (!mover) continue;
            // approached object: largest distance decrease over the motion
            const SceneObject* approached = nullptr;
            double best_gain = params.min_displacement;
            for (const auto& o : kf.scene.objects) {
                if (mover->env_slot && !detail::class_matches(o.object_class, *mover->env_slot))
                    continue;
                const double gain = distance(here, o.position) - distance(next, o.position);
                if (gain >= best_gain) {
                    best_gain = gain;
                    approached = &o;
                }
            }
            if (!approached) continue;
            std::optional<std::string> env;
            if (mover->env_slot) env = approached->id;
            push(*mover, env,
                 "Because the robot is moving towards the position of " + approached->id +
                     (annotated ? " and the tactile status is idle." : "."));
            continue;
        }
        if (!annotated) continue;  // contact skills need status evidence

        switch (status) {
            case ObjectStatus::Grasped:
                push(lib.resolve("grasp"), std::nullopt,
                     "Because the tactile status indicates that the " + target + " is grasped.");
                break;
            case ObjectStatus::LinearForce: {
                auto skills = lib.find_by_signature(ObjectStatus::LinearForce, holding);
                if (skills.empty()) throw NoMatchingSkill(status, holding);
                push(*skills.front(), std::nullopt,
                     "Because the tactile status indicates the " + target +
                         " is under linear force.");
                break;
            }
            case ObjectStatus::Torque: {
                auto skills = lib.find_by_signature(ObjectStatus::Torque, holding);
                if (skills.empty()) throw NoMatchingSkill(status, holding);
                const Skill& skill = *skills.front();
                const SceneObject* env = detail::bind_env(kf, skill, target, params.accept_radius);
                std::optional<std::string> env_id;
                if (env) env_id = env->id;
                push(skill, env_id,
                     "Because the tactile status indicates the " + target + " is under torque" +
                         (env ? ", interacting with " + env->id + "." : "."));
                break;
            }
            case ObjectStatus::Released: {
                const Skill* rel = lib.try_resolve("open_hand");
                if (!rel) rel = lib.try_resolve("release");
                if (!rel) {
                    auto skills = lib.find_by_signature(ObjectStatus::Released, holding);
                    if (skills.empty()) throw NoMatchingSkill(status, holding);
                    rel = skills.front();
                }
                push(*rel, std::nullopt,
                     "Because the tactile status indicates the " + target + " is released.");
                break;
            }
            default: break;
        }
    }

    // collapse consecutive identical inferences, keeping the keyframe span
    std::vector<InferredStep> out;
    for (auto& s : raw) {
        if (!out.empty() && out.back().step.same_binding(s.step))
            out.back().kf_end = s.kf_end;
        else
            out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<SkillStep> infer_skill_sequence_rule_based(
    const pddl::PddlDomain& domain, const SkillLibrary& lib,
    const std::vector<KeyFrame>& keyframes, const std::string& task_description,
    const InferenceParams& params = {}) {
    std::vector<SkillStep> out;
    for (auto& d : infer_steps_detailed(domain, lib, keyframes, task_description, params))
        out.push_back(std::move(d.step));
    return out;
}

// ---------------------------------------------------------------------------
// Transcript parsing (the remote reasoner's output format)

/// Parses reasoner transcripts of the form
///   Frame N (HH:MM:SS.mmm): (skill arg ...) ; reason
/// Blank lines are tolerated; entries are ordered by frame number.
inline std::vector<SkillStep> parse_reasoner_transcript(const std::string& text) {
    static const std::regex line_re(
        R"(^\s*Frame\s+(\d+)\s*\((\d{1,2}):(\d{2}):(\d{2}(?:\.\d+)?)\)\s*:\s*\(([^()]*)\)\s*;\s*(.*?)\s*$)");
    struct Entry {
        long frame;
        SkillStep step;
    };
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (blank) continue;
        std::smatch m;
        if (!std::regex_match(line, m, line_re))
            throw TranscriptParseError(line_no, "expected 'Frame N (HH:MM:SS.mmm): (skill ...) ; reason'");
        Entry e;
        e.frame = std::stol(m[1]);
        std::istringstream body(m[5]);
        std::vector<std::string> toks;
        std::string tok;
        while (body >> tok) toks.push_back(tok);
        if (toks.empty()) throw TranscriptParseError(line_no, "empty skill expression");
        e.step.skill = toks[0];
        if (toks.size() >= 2) e.step.target = toks[1];
        if (toks.size() == 3) e.step.env = toks[2];
        if (toks.size() >= 4) {
            e.step.params["direction"] = toks[2];
            e.step.env = toks[3];
        }
        e.step.reason = m[6];
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw TranscriptParseError(line_no, "no frame entries found");
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.frame < b.frame; });
    std::vector<SkillStep> out;
    for (auto& e : entries) out.push_back(std::move(e.step));
    return out;
}

/// Inverse of parse_reasoner_transcript for a step list; frame numbers and
/// timestamps are synthesized from the index.
inline std::string format_transcript(const std::vector<SkillStep>& steps) {
    std::ostringstream out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        const long total = static_cast<long>(i) * 5;
        char stamp[32];
        std::snprintf(stamp, sizeof(stamp), "%02ld:%02ld:%02ld.%03d", total / 3600,
                      (total / 60) % 60, total % 60, 0);
        out << "Frame " << (i + 1) << " (" << stamp << "): (" << s.skill;
        if (!s.target.empty()) out << " " << s.target;
        if (s.params.count("direction"))
            out << " " << std::get<std::string>(s.params.at("direction"));
        if (s.env) out << " " << *s.env;
        out << ") ; " << (s.reason.empty() ? "Because of the observed evidence." : s.reason)
            << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Demonstration task plan

class InvalidSequence : public Error {
public:
    explicit InvalidSequence(const pddl::ValidationReport& report)
        : Error(describe(report)), report(report) {}
    pddl::ValidationReport report;

private:
    static std::string describe(const pddl::ValidationReport& r) {
        std::string s = "demonstrated sequence does not validate:";
        for (std::size_t i = 0; i < r.steps.size(); ++i)
            if (!r.steps[i].ok) s += " step " + std::to_string(i) + " (" + r.steps[i].detail + ")";
        return s;
    }
};

/// The demonstration task plan: the inferred skill sequence, the grounded
/// library it executes against, the translated domain, and the demo scene
/// context needed to generalize it.
struct DemoTaskPlan {
    std::vector<SkillStep> steps;
    std::shared_ptr<const SkillLibrary> grounded_library;
    pddl::PddlDomain domain;
    std::string task_description;
    std::vector<SceneObject> demo_objects;
    pddl::WorldState init;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["task_description"] = task_description;
        auto arr = nlohmann::json::array();
        for (const auto& s : steps) arr.push_back(s.to_json());
        j["steps"] = arr;
        j["library"] = grounded_library->to_json();
        j["domain"] = pddl::emit(domain);
        auto objs = nlohmann::json::array();
        for (const auto& o : demo_objects) objs.push_back(o.to_json());
        j["objects"] = objs;
        auto init_arr = nlohmann::json::array();
        for (const auto& a : init) {
            auto atom = nlohmann::json::array();
            atom.push_back(a.pred);
            for (const auto& arg : a.args) atom.push_back(arg);
            init_arr.push_back(atom);
        }
        j["init"] = init_arr;
        return j;
    }

    // validation of the loaded steps happens in from_json: a demo task
    // plan that does not validate from its own initial state is rejected
    static DemoTaskPlan from_json(const nlohmann::json& j);
};

/// Symbolic initial state of a demonstration or scene: the hand is open;
/// a named target (the cable held by the leader arm) is already under grip
/// control.
inline pddl::WorldState initial_state(const std::string& target_id) {
    pddl::WorldState init{{"hand_open", {}}};
    if (!target_id.empty()) init.insert({"holding", {target_id}});
    return init;
}

/// Ground plan steps against the library's skill declarations.
inline std::vector<pddl::GroundAction> steps_to_ground_actions(
    const SkillLibrary& lib, const std::vector<SkillStep>& steps) {
    std::vector<pddl::GroundAction> out;
    for (const auto& s : steps) out.push_back(step_to_ground_action(lib.resolve(s.skill), s));
    return out;
}

inline DemoTaskPlan DemoTaskPlan::from_json(const nlohmann::json& j) {
    DemoTaskPlan p;
    p.task_description = j.at("task_description");
    for (const auto& s : j.at("steps")) p.steps.push_back(SkillStep::from_json(s));
    p.grounded_library = SkillLibrary::from_json(j.at("library"));
    p.domain = pddl::parse_domain(j.at("domain"));
    for (const auto& o : j.at("objects")) p.demo_objects.push_back(SceneObject::from_json(o));
    for (const auto& a : j.at("init")) {
        pddl::GroundAtom atom;
        atom.pred = a.at(0);
        for (std::size_t i = 1; i < a.size(); ++i) atom.args.push_back(a[i]);
        p.init.insert(atom);
    }
    auto report = pddl::validate_plan(p.domain, p.init,
                                      steps_to_ground_actions(*p.grounded_library, p.steps), {});
    if (!report.all_ok()) throw InvalidSequence(report);
    return p;
}

/// Bundles the inferred steps with the threshold-updated library and the
/// domain. Fails closed: the steps must validate from the demo initial
/// state.
inline DemoTaskPlan build_demo_plan(std::shared_ptr<const SkillLibrary> lib,
                                    const pddl::PddlDomain& domain,
                                    const std::vector<SkillStep>& steps,
                                    const std::map<std::string, double>& groundings,
                                    const pddl::WorldState& init,
                                    const std::string& task_description,
                                    std::vector<SceneObject> demo_objects = {}) {
    auto report = pddl::validate_plan(domain, init, steps_to_ground_actions(*lib, steps), {});
    if (!report.all_ok()) throw InvalidSequence(report);
    DemoTaskPlan plan;
    plan.steps = steps;
    plan.grounded_library = ftsig::update_library(*lib, groundings);
    plan.domain = domain;
    plan.task_description = task_description;
    plan.demo_objects = std::move(demo_objects);
    plan.init = init;
    return plan;
}

// ---------------------------------------------------------------------------
// Reasoner backends

/// Pluggable skill-sequence reasoner.
class ReasonerBackend {
public:
    enum class Capability { Deterministic, Remote };
    virtual ~ReasonerBackend() = default;
    virtual Capability capability() const = 0;
    virtual std::vector<SkillStep> infer(const pddl::PddlDomain& domain,
                                         const std::vector<KeyFrame>& keyframes,
                                         const std::string& task_description) = 0;
};

class RuleBasedBackend : public ReasonerBackend {
public:
    RuleBasedBackend(std::shared_ptr<const SkillLibrary> lib, InferenceParams params = {})
        : lib_(std::move(lib)), params_(params) {}
    Capability capability() const override { return Capability::Deterministic; }
    std::vector<SkillStep> infer(const pddl::PddlDomain& domain,
                                 const std::vector<KeyFrame>& keyframes,
                                 const std::string& task_description) override {
        return infer_skill_sequence_rule_based(domain, *lib_, keyframes, task_description,
                                               params_);
    }

private:
    std::shared_ptr<const SkillLibrary> lib_;
    InferenceParams params_;
};

/// Replays a fixed transcript; stands in for a remote service in tests and
/// in the CLI's mock mode.
class TranscriptBackend : public ReasonerBackend {
public:
    explicit TranscriptBackend(std::string transcript) : transcript_(std::move(transcript)) {}
    Capability capability() const override { return Capability::Deterministic; }
    std::vector<SkillStep> infer(const pddl::PddlDomain&, const std::vector<KeyFrame>&,
                                 const std::string&) override {
        return parse_reasoner_transcript(transcript_);
    }

private:
    std::string transcript_;
};

// ---------------------------------------------------------------------------
// End-to-end demonstration analysis

enum class AblationGroup { Ours, A, B, C, D };

inline const char* to_string(AblationGroup g) {
    switch (g) {
        case AblationGroup::Ours: return "ours";
        case AblationGroup::A: return "A";
        case AblationGroup::B: return "B";
        case AblationGroup::C: return "C";
        case AblationGroup::D: return "D";
    }
    return "?";
}

inline AblationGroup ablation_from_string(const std::string& s) {
    if (s == "ours") return AblationGroup::Ours;
    if (s == "A" || s == "a") return AblationGroup::A;
    if (s == "B" || s == "b") return AblationGroup::B;
    if (s == "C" || s == "c") return AblationGroup::C;
    if (s == "D" || s == "d") return AblationGroup::D;
    throw Error("unknown ablation group: " + s);
}

struct AnalyzeOptions {
    AblationGroup group = AblationGroup::Ours;
    tactile::SegmentationParams segmentation;
    InferenceParams inference;
    ftsig::GroundingParams grounding;
    double post_window = 1.0;  // seconds of signal after the active segment
    int uniform_frames = 8;    // group B keyframe count
};

struct AnalysisResult {
    std::vector<tactile::Segment> segments;
    std::vector<KeyFrame> keyframes;
    std::vector<SkillStep> steps;
    std::map<std::string, double> groundings;
    DemoTaskPlan plan;
};

/// Grounds the resistance thresholds of a step sequence by aligning each
/// step to the next segment with the skill's status signature and fitting
/// against the demonstration's F/T trace. Grounded values land both in the
/// step's parameters (per occurrence, hence per contextual object) and in
/// the returned skill-level map (last occurrence wins).
inline std::map<std::string, double> ground_steps(const DemoRecord& demo, const SkillLibrary& lib,
                                                  const std::vector<tactile::Segment>& segments,
                                                  std::vector<SkillStep>& steps,
                                                  double post_window,
                                                  const ftsig::GroundingParams& params = {}) {
    const auto trace = ftsig::reduce(demo.wrench);
    std::map<std::string, double> groundings;
    std::size_t cursor = 0;
    for (auto& step : steps) {
        const Skill& skill = lib.resolve(step.skill);
        std::size_t match = segments.size();
        for (std::size_t i = cursor; i < segments.size(); ++i)
            if (segments[i].status == skill.status_signature) {
                match = i;
                break;
            }
        const auto* resist = skill.success.find_resistance();
        if (match == segments.size()) {
            if (resist) throw Error("no segment aligns with resistance skill " + skill.name);
            continue;
        }
        cursor = match + 1;
        if (!resist) continue;

        using K = ConditionExpr::Kind;
        const auto channel = (resist->kind() == K::ResistanceTorqueAbove ||
                              resist->kind() == K::ResistanceTorqueBelow)
                                 ? ftsig::Channel::Torque
                                 : ftsig::Channel::Force;
        const auto direction = (resist->kind() == K::ResistanceForceBelow ||
                                resist->kind() == K::ResistanceTorqueBelow)
                                   ? ftsig::ThresholdDirection::Below
                                   : ftsig::ThresholdDirection::Above;
        const double theta = ftsig::ground_threshold(trace, segments[match], post_window,
                                                     direction, channel, params);
        step.params[skill.threshold_key()] = theta;
        groundings[skill.name] = theta;
    }
    return groundings;
}

/// Full bootstrapped analysis of one demonstration: tactile segmentation,
/// keyframe annotation (per the ablation group), skill-sequence inference
/// through the backend, threshold grounding (skipped for group C), and
/// demo-plan assembly.
inline AnalysisResult analyze_demonstration(const DemoRecord& demo,
                                            std::shared_ptr<const SkillLibrary> lib,
                                            ReasonerBackend& backend,
                                            const AnalyzeOptions& opts = {}) {
    AnalysisResult result;
    result.segments = tactile::segment_sequence(demo.tactile, opts.segmentation);

    switch (opts.group) {
        case AblationGroup::A: {
            result.keyframes = annotate_keyframes(demo, result.segments);
            for (auto& kf : result.keyframes) {
                kf.status.reset();
                kf.caption = "holding: " + std::string(kf.scene.holding ? "yes" : "no");
            }
            break;
        }
        case AblationGroup::B:
            result.keyframes = uniform_keyframes(demo, opts.uniform_frames);
            break;
        default: result.keyframes = annotate_keyframes(demo, result.segments); break;
    }

    const auto domain = pddl::translate_library(*lib);
    result.steps =
        collapse_steps(backend.infer(domain, result.keyframes, demo.task_description));
    // transcripts may leave the target implicit, e.g. "(open_hand)"
    for (auto& s : result.steps)
        if (s.target.empty() && !demo.target_id.empty()) s.target = demo.target_id;
    if (result.steps.size() > result.keyframes.size())
        throw Error("backend produced more steps than keyframes");
    for (const auto& s : result.steps)
        if (!domain.find_action(s.skill))
            throw Error("backend step names unknown action: " + s.skill);

    if (opts.group != AblationGroup::C)
        result.groundings = ground_steps(demo, *lib, result.segments, result.steps,
                                         opts.post_window, opts.grounding);

    result.plan = build_demo_plan(lib, domain, result.steps, result.groundings,
                                  initial_state(demo.target_id), demo.task_description,
                                  demo.annotations.empty() ? std::vector<SceneObject>{}
                                                           : demo.annotations.front().objects);
    return result;
}

}  // namespace demoplan::analyzer
