#pragma once

// Generalizes a demonstration task plan to new scene configurations by
// template instantiation (the deterministic analogue of example-guided
// planning), and monitors execution, consuming skill returns to continue,
// retry with a relaxed threshold, or abort.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "demoplan/analyzer.hpp"
#include "demoplan/core.hpp"
#include "demoplan/ftsig.hpp"
#include "demoplan/pddl.hpp"
#include "demoplan/skill.hpp"
#include "json.hpp"

namespace demoplan::planner {

using analyzer::SceneObject;
using analyzer::SkillStep;

class NoEnvObjects : public Error {
public:
    NoEnvObjects() : Error("demo plan references no contextual objects") {}
};

class NoBlockForClass : public Error {
public:
    explicit NoBlockForClass(const std::string& cls)
        : Error("no template block for object class: " + cls) {}
};

class ValidationFailed : public Error {
public:
    explicit ValidationFailed(const pddl::ValidationReport& report)
        : Error(describe(report)), report(report) {}
    pddl::ValidationReport report;

private:
    static std::string describe(const pddl::ValidationReport& r) {
        std::string s = "generated plan does not validate:";
        for (std::size_t i = 0; i < r.steps.size(); ++i)
            if (!r.steps[i].ok) s += " step " + std::to_string(i) + " (" + r.steps[i].detail + ")";
        if (!r.goal_satisfied) s += " goal not satisfied";
        return s;
    }
};

// ---------------------------------------------------------------------------
// Scene configurations

/// A (possibly new) task configuration: the scene objects and the task
/// order in which to handle them.
struct SceneConfig {
    std::string task;  // cable_mounting | cap_tightening
    std::vector<SceneObject> objects;
    std::vector<std::string> ordering;  // ids of the objects to work through
    std::uint64_t seed = 0;

    const SceneObject* find(const std::string& id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }

    /// The manipulated object when it is not a scene object (the cable).
    std::string target_id() const { return task == "cable_mounting" ? "cable" : ""; }

    pddl::WorldState initial_state() const { return analyzer::initial_state(target_id()); }

    void validate() const {
        for (std::size_t i = 0; i < objects.size(); ++i)
            for (std::size_t k = i + 1; k < objects.size(); ++k)
                if (objects[i].id == objects[k].id)
                    throw Error("duplicate scene object id: " + objects[i].id);
        auto count_prefix = [&](const std::string& p) {
            std::size_t n = 0;
            for (const auto& o : objects)
                if (o.object_class.rfind(p, 0) == 0) ++n;
            return n;
        };
        if (task == "cable_mounting") {
            if (count_prefix("clip") < 1) throw Error("cable task needs at least one clip");
        } else if (task == "cap_tightening") {
            if (count_prefix("cap") < 1) throw Error("cap task needs at least one cap");
            if (count_prefix("bottle") != 1) throw Error("cap task needs exactly one bottle");
        } else {
            throw Error("unknown task: " + task);
        }
        for (const auto& id : ordering)
            if (!find(id)) throw Error("ordering references unknown object: " + id);
    }

    nlohmann::json to_json() const {
        auto objs = nlohmann::json::array();
        for (const auto& o : objects) objs.push_back(o.to_json());
        return {{"task", task}, {"objects", objs}, {"ordering", ordering}, {"seed", seed}};
    }
    static SceneConfig from_json(const nlohmann::json& j) {
        SceneConfig s;
        s.task = j.at("task");
        for (const auto& o : j.at("objects")) s.objects.push_back(SceneObject::from_json(o));
        s.ordering = j.at("ordering").get<std::vector<std::string>>();
        s.seed = j.value("seed", 0);
        s.validate();
        return s;
    }
};

// ---------------------------------------------------------------------------
// Plan templates

/// The demonstration plan partitioned into a prologue, per-object blocks
/// (an approach step plus the contact steps that follow it), and an
/// epilogue. Blocks are keyed by the class of the object they handle.
struct PlanTemplate {
    struct Block {
        std::string key_class;
        std::string anchor_id;  // the demo object this block manipulated
        std::vector<SkillStep> steps;
    };
    std::vector<SkillStep> prologue;
    std::vector<Block> blocks;
    std::vector<SkillStep> epilogue;
    pddl::PddlDomain domain;
    std::shared_ptr<const SkillLibrary> library;
    std::string task_description;
    std::string source_id;
};

/// Partitions the demo plan at its approach steps. Every approach
/// (idle-signature skill with a bound contextual object) opens a new block
/// anchored at the approached object; contact steps follow their approach.
inline PlanTemplate extract_template(const analyzer::DemoTaskPlan& demo_plan) {
    PlanTemplate tpl;
    tpl.domain = demo_plan.domain;
    tpl.library = demo_plan.grounded_library;
    tpl.task_description = demo_plan.task_description;
    tpl.source_id = demo_plan.task_description;

    auto class_of = [&](const std::string& id) -> std::string {
        for (const auto& o : demo_plan.demo_objects)
            if (o.id == id) return o.object_class;
        return "";
    };
    auto is_approach = [&](const SkillStep& s) {
        const Skill* skill = tpl.library->try_resolve(s.skill);
        return skill && skill->status_signature == ObjectStatus::Idle && s.env.has_value();
    };

    bool any_env = false;
    for (const auto& s : demo_plan.steps) any_env |= s.env.has_value();
    if (!any_env) throw NoEnvObjects();

    PlanTemplate::Block* open = nullptr;
    for (const auto& s : demo_plan.steps) {
        if (is_approach(s)) {
            PlanTemplate::Block b;
            b.anchor_id = *s.env;
            b.key_class = class_of(b.anchor_id);
            tpl.blocks.push_back(std::move(b));
            open = &tpl.blocks.back();
        }
        if (open)
            open->steps.push_back(s);
        else
            tpl.prologue.push_back(s);
    }
    if (tpl.blocks.empty()) {
        // no approach steps: a single block anchored at the first bound object
        PlanTemplate::Block b;
        for (const auto& s : demo_plan.steps)
            if (s.env) {
                b.anchor_id = *s.env;
                break;
            }
        b.key_class = class_of(b.anchor_id);
        b.steps = tpl.prologue;
        tpl.prologue.clear();
        tpl.blocks.push_back(std::move(b));
    }
    return tpl;
}

// ---------------------------------------------------------------------------
// Planning for a new scene

/// Grounded task plan for one scene. The scene configuration rides along
/// so execution needs nothing beyond the plan file.
struct TaskPlan {
    std::vector<SkillStep> steps;
    std::shared_ptr<const SkillLibrary> library;
    pddl::PddlDomain domain;
    SceneConfig scene;
    std::set<pddl::GroundAtom> goal;
    pddl::WorldState init;
    std::string demo_plan_id;  // provenance
    std::string scene_id;

    nlohmann::json to_json() const {
        nlohmann::json j;
        auto arr = nlohmann::json::array();
        for (const auto& s : steps) arr.push_back(s.to_json());
        j["steps"] = arr;
        j["library"] = library->to_json();
        j["domain"] = pddl::emit(domain);
        j["scene"] = scene.to_json();
        auto goal_arr = nlohmann::json::array();
        for (const auto& g : goal) {
            auto atom = nlohmann::json::array();
            atom.push_back(g.pred);
            for (const auto& a : g.args) atom.push_back(a);
            goal_arr.push_back(atom);
        }
        j["goal"] = goal_arr;
        auto init_arr = nlohmann::json::array();
        for (const auto& g : init) {
            auto atom = nlohmann::json::array();
            atom.push_back(g.pred);
            for (const auto& a : g.args) atom.push_back(a);
            init_arr.push_back(atom);
        }
        j["init"] = init_arr;
        j["provenance"] = {{"demo_plan", demo_plan_id}, {"scene", scene_id}};
        return j;
    }

    static TaskPlan from_json(const nlohmann::json& j) {
        TaskPlan p;
        for (const auto& s : j.at("steps")) p.steps.push_back(SkillStep::from_json(s));
        p.library = SkillLibrary::from_json(j.at("library"));
        p.domain = pddl::parse_domain(j.at("domain"));
        p.scene = SceneConfig::from_json(j.at("scene"));
        auto read_atoms = [&](const nlohmann::json& arr, auto insert) {
            for (const auto& a : arr) {
                pddl::GroundAtom atom;
                atom.pred = a.at(0);
                for (std::size_t i = 1; i < a.size(); ++i) atom.args.push_back(a[i]);
                insert(atom);
            }
        };
        read_atoms(j.at("goal"), [&](const pddl::GroundAtom& a) { p.goal.insert(a); });
        read_atoms(j.at("init"), [&](const pddl::GroundAtom& a) { p.init.insert(a); });
        p.demo_plan_id = j.at("provenance").at("demo_plan");
        p.scene_id = j.at("provenance").at("scene");
        return p;
    }
};

/// Direction token for an opening direction vector (dominant axis).
inline std::string direction_token(const Vec3& v) {
    const double ax = std::abs(v.x), ay = std::abs(v.y), az = std::abs(v.z);
    if (az >= ax && az >= ay) return v.z < 0 ? "downward" : "upward";
    if (ax >= ay) return v.x < 0 ? "backward" : "forward";
    return v.y < 0 ? "rightward" : "leftward";
}

/// The goal atoms a step sequence is meant to achieve: the contact-step
/// effect atoms (inserted/tightened), excluding bookkeeping predicates.
inline std::set<pddl::GroundAtom> goal_atoms(const SkillLibrary& lib,
                                             const pddl::PddlDomain& domain,
                                             const std::vector<SkillStep>& steps) {
    std::set<pddl::GroundAtom> out;
    for (const auto& step : steps) {
        const Skill* skill = lib.try_resolve(step.skill);
        if (!skill || !skill->env_slot) continue;
        const auto* action = domain.find_action(step.skill);
        if (!action) continue;
        const auto ga = analyzer::step_to_ground_action(*skill, step);
        pddl::Bindings b;
        for (std::size_t i = 0; i < ga.args.size() && i < action->params.size(); ++i)
            b[action->params[i].name] = ga.args[i];
        for (const auto& lit : action->add_effects) {
            if (lit.pred == "holding" || lit.pred == "hand_open" || lit.pred == "at") continue;
            pddl::GroundAtom atom{lit.pred, {}};
            bool ok = true;
            for (const auto& arg : lit.args) {
                if (!arg.empty() && arg[0] == '?') {
                    auto it = b.find(arg);
                    if (it == b.end()) ok = false;
                    else atom.args.push_back(it->second);
                } else {
                    atom.args.push_back(arg);
                }
            }
            if (ok) out.insert(atom);
        }
    }
    return out;
}

/// Instantiates one template block per object in scene.ordering (exact
/// class match, falling back to a same-family block), substituting the
/// block's anchor for the new object everywhere it is bound. The result
/// must validate under the demo domain with every per-object effect atom
/// achieved.
inline TaskPlan plan_new_task(const PlanTemplate& tpl, const SceneConfig& scene) {
    TaskPlan plan;
    plan.library = tpl.library;
    plan.domain = tpl.domain;
    plan.scene = scene;
    plan.init = scene.initial_state();
    plan.demo_plan_id = tpl.source_id;
    plan.scene_id = scene.task + "#" + std::to_string(scene.seed);
    plan.steps = tpl.prologue;

    auto family = [](const std::string& cls) {
        const auto us = cls.find('_');
        return us == std::string::npos ? cls : cls.substr(0, us);
    };

    for (const auto& id : scene.ordering) {
        const SceneObject* obj = scene.find(id);
        if (!obj) throw Error("ordering references unknown object: " + id);
        const PlanTemplate::Block* block = nullptr;
        for (const auto& b : tpl.blocks)
            if (b.key_class == obj->object_class) block = &b;
        if (!block)
            for (const auto& b : tpl.blocks)
                if (family(b.key_class) == family(obj->object_class)) block = &b;
        if (!block) throw NoBlockForClass(obj->object_class);

        for (SkillStep step : block->steps) {
            if (step.target == block->anchor_id) step.target = obj->id;
            if (step.env && *step.env == block->anchor_id) step.env = obj->id;
            if (step.params.count("pose"))
                step.params["pose"] = "p_" + step.env.value_or(step.target);
            if (step.params.count("direction") && obj->opening_direction)
                step.params["direction"] = direction_token(*obj->opening_direction);
            plan.steps.push_back(std::move(step));
        }
    }
    for (const auto& s : tpl.epilogue) plan.steps.push_back(s);

    plan.goal = goal_atoms(*plan.library, plan.domain, plan.steps);
    auto report = pddl::validate_plan(
        plan.domain, plan.init, analyzer::steps_to_ground_actions(*plan.library, plan.steps),
        plan.goal);
    if (!report.all_ok() || !report.goal_satisfied) throw ValidationFailed(report);
    return plan;
}

// ---------------------------------------------------------------------------
// Execution with return feedback

struct ExecutionPolicy {
    enum class OnError { RetryRelaxed, Skip, Abort };
    OnError on_error = OnError::Abort;
    double relax_factor = 1.2;  // Below thresholds multiply, Above divide
    int max_retries = 1;

    void validate() const {
        if (relax_factor <= 1.0) throw Error("relax_factor must exceed 1");
        if (max_retries < 0) throw Error("max_retries must be non-negative");
    }

    static OnError on_error_from_string(const std::string& s) {
        if (s == "retry_relaxed") return OnError::RetryRelaxed;
        if (s == "skip") return OnError::Skip;
        if (s == "abort") return OnError::Abort;
        throw Error("unknown error policy: " + s);
    }
};

struct StepExecution {
    SkillReturn ret;
    double elapsed = 0.0;  // simulated seconds
};

/// Executor interface: runs one step, optionally with an overridden
/// success threshold, and reports physically achieved goal atoms.
class Executor {
public:
    virtual ~Executor() = default;
    virtual StepExecution execute(const SkillStep& step,
                                  std::optional<double> threshold_override) = 0;
    virtual std::set<pddl::GroundAtom> achieved_atoms() const { return {}; }
    virtual ftsig::ResistanceTrace take_trace() { return {}; }
};

/// Per-step execution record plus the run-level outcome flags.
/// `executable` means every attempted step ultimately returned success;
/// `task_success` means every goal atom was physically achieved. The two
/// are independent: a task can complete physically while a step errors,
/// and a step can return success without physical progress.
struct ExecResult {
    struct StepRecord {
        enum class Outcome { Success, Error, NotExecuted };
        SkillStep step;
        Outcome outcome = Outcome::NotExecuted;
        std::string error_code;
        int retries = 0;
        std::optional<double> relaxed_threshold;
        double elapsed = 0.0;
    };
    std::vector<StepRecord> steps;
    bool executable = false;
    bool task_success = false;
    ftsig::ResistanceTrace trace;

    nlohmann::json to_json() const {
        nlohmann::json j;
        auto arr = nlohmann::json::array();
        for (const auto& r : steps) {
            nlohmann::json e;
            e["step"] = r.step.to_json();
            e["outcome"] = r.outcome == StepRecord::Outcome::Success       ? "success"
                           : r.outcome == StepRecord::Outcome::Error       ? "error"
                                                                           : "not_executed";
            if (!r.error_code.empty()) e["error_code"] = r.error_code;
            e["retries"] = r.retries;
            if (r.relaxed_threshold) e["relaxed_threshold"] = *r.relaxed_threshold;
            e["elapsed"] = r.elapsed;
            arr.push_back(e);
        }
        j["steps"] = arr;
        j["executable"] = executable;
        j["task_success"] = task_success;
        auto tr = nlohmann::json::array();
        for (const auto& p : trace.samples) tr.push_back({p.t, p.f_r, p.tau_r});
        j["trace"] = tr;
        return j;
    }
};

namespace detail {

inline std::optional<double> step_threshold(const SkillLibrary& lib, const SkillStep& step) {
    const Skill* skill = lib.try_resolve(step.skill);
    if (!skill) return std::nullopt;
    const std::string key = skill->threshold_key();
    if (!key.empty()) {
        auto it = step.params.find(key);
        if (it != step.params.end() && std::holds_alternative<double>(it->second))
            return std::get<double>(it->second);
        if (const auto* r = skill->success.find_resistance()) return r->threshold();
    }
    return std::nullopt;
}

inline bool threshold_is_below(const Skill& skill) {
    const auto* r = skill.success.find_resistance();
    using K = ConditionExpr::Kind;
    return r && (r->kind() == K::ResistanceForceBelow || r->kind() == K::ResistanceTorqueBelow);
}

}  // namespace detail

/// Runs the plan in order, feeding each skill return back into the policy:
/// retry_relaxed re-runs a failed step with a relaxed threshold (Below
/// thresholds multiply by relax_factor, Above divide), skip advances, and
/// abort marks the remaining steps NotExecuted. The input plan is never
/// mutated; relaxed thresholds live only in the result records.
inline ExecResult execute_with_feedback(const TaskPlan& plan, Executor& executor,
                                        const ExecutionPolicy& policy = {}) {
    policy.validate();
    ExecResult result;
    bool aborted = false;
    for (const auto& step : plan.steps) {
        ExecResult::StepRecord record;
        record.step = step;
        if (aborted) {
            result.steps.push_back(std::move(record));
            continue;
        }
        auto outcome = executor.execute(step, std::nullopt);
        record.elapsed = outcome.elapsed;
        if (!outcome.ret.ok && policy.on_error == ExecutionPolicy::OnError::RetryRelaxed) {
            const Skill* skill = plan.library->try_resolve(step.skill);
            auto theta = detail::step_threshold(*plan.library, step);
            while (!outcome.ret.ok && record.retries < policy.max_retries && skill && theta) {
                const bool below = detail::threshold_is_below(*skill);
                theta = below ? *theta * policy.relax_factor : *theta / policy.relax_factor;
                record.relaxed_threshold = theta;
                outcome = executor.execute(step, theta);
                record.elapsed += outcome.elapsed;
                ++record.retries;
            }
        }
        if (outcome.ret.ok) {
            record.outcome = ExecResult::StepRecord::Outcome::Success;
        } else {
            record.outcome = ExecResult::StepRecord::Outcome::Error;
            record.error_code = outcome.ret.error_code;
            if (policy.on_error != ExecutionPolicy::OnError::Skip) aborted = true;
        }
        result.steps.push_back(std::move(record));
    }
    result.executable =
        std::all_of(result.steps.begin(), result.steps.end(), [](const auto& r) {
            return r.outcome == ExecResult::StepRecord::Outcome::Success;
        });
    const auto achieved = executor.achieved_atoms();
    result.task_success =
        !plan.goal.empty() &&
        std::all_of(plan.goal.begin(), plan.goal.end(),
                    [&](const pddl::GroundAtom& g) { return achieved.count(g) > 0; });
    result.trace = executor.take_trace();
    return result;
}

}  // namespace demoplan::planner
