// Command-line entry point chaining the demonstration-to-plan pipeline:
//   synth    - synthesize a demonstration for a task
//   segment  - segment a tactile JSONL file into status segments
//   analyze  - derive the demonstration task plan (rule/mock/remote backend)
//   plan     - generalize a demo plan to a new scene configuration
//   exec     - execute a task plan in the simulator
//   eval     - run the ablation grid and emit the metrics CSV
// Stages communicate only through files; every command is deterministic
// for a fixed seed. Recoverable errors exit 1 with a machine-readable JSON
// object on stderr.

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "demoplan/demoplan.hpp"

namespace {

using namespace demoplan;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out.good()) throw Error("cannot write file: " + path);
    out << content;
}

nlohmann::json load_json(const std::string& path) {
    return nlohmann::json::parse(read_file(path));
}

struct StageTimer {
    bool verbose;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    void report(const std::string& stage) {
        if (!verbose) return;
        const auto now = std::chrono::steady_clock::now();
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(now - start).count();
        std::cerr << "[" << stage << "] " << ms << " ms\n";
        start = now;
    }
};

std::map<std::string, sim::ResistanceProfile> profiles_from_config(const std::string& config) {
    auto profiles = sim::builtin_profiles();
    if (config.empty()) return profiles;
    auto j = load_json(config);
    if (j.contains("profiles"))
        for (const auto& p : j["profiles"]) {
            auto prof = sim::ResistanceProfile::from_json(p);
            profiles[prof.key] = prof;
        }
    return profiles;
}

analyzer::AnalyzeOptions analyze_options_from_config(const std::string& config,
                                                     const std::string& group) {
    analyzer::AnalyzeOptions opts;
    opts.group = analyzer::ablation_from_string(group);
    if (config.empty()) return opts;
    auto j = load_json(config);
    if (j.contains("segmentation")) {
        const auto& s = j["segmentation"];
        opts.segmentation.vote_window = s.value("vote_window", opts.segmentation.vote_window);
        opts.segmentation.min_duration = s.value("min_duration", opts.segmentation.min_duration);
    }
    if (j.contains("grounding")) {
        const auto& g = j["grounding"];
        opts.grounding.rho = g.value("rho", opts.grounding.rho);
        opts.grounding.gamma = g.value("gamma", opts.grounding.gamma);
        opts.grounding.beta = g.value("beta", opts.grounding.beta);
        opts.post_window = g.value("post_window", opts.post_window);
    }
    if (j.contains("inference")) {
        const auto& i = j["inference"];
        opts.inference.min_displacement =
            i.value("min_displacement", opts.inference.min_displacement);
        opts.inference.accept_radius = i.value("accept_radius", opts.inference.accept_radius);
    }
    if (j.contains("uniform_frames")) opts.uniform_frames = j["uniform_frames"];
    return opts;
}

class RemoteBackend : public analyzer::ReasonerBackend {
public:
    explicit RemoteBackend(analyzer::RemoteConfig cfg) : cfg_(std::move(cfg)) {}
    Capability capability() const override { return Capability::Remote; }
    std::vector<analyzer::SkillStep> infer(const pddl::PddlDomain& domain,
                                           const std::vector<analyzer::KeyFrame>& keyframes,
                                           const std::string& task) override {
        return analyzer::infer_skill_sequence_remote(cfg_, domain, keyframes, task);
    }

private:
    analyzer::RemoteConfig cfg_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"demonstration-to-plan pipeline for contact-rich manipulation"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global flags after the subcommand too

    std::string config_path;
    std::uint64_t seed = 7;
    std::string out_dir = ".";
    bool verbose = false;
    app.add_option("--config", config_path, "pipeline configuration JSON");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--verbose", verbose, "print per-stage timing to stderr");

    auto* synth = app.add_subcommand("synth", "synthesize a demonstration");
    std::string synth_task = "cable";
    synth->add_option("--task", synth_task, "cable | cap");

    auto* segment = app.add_subcommand("segment", "segment a tactile JSONL file");
    std::string segment_file;
    double min_dur = 0.3;
    segment->add_option("file", segment_file, "tactile JSONL file")->required();
    segment->add_option("--min-dur", min_dur, "minimum segment duration (s)");

    auto* analyze = app.add_subcommand("analyze", "derive the demonstration task plan");
    std::string analyze_demo, analyze_backend = "rule", analyze_group = "ours";
    std::string domain_out, transcript_path;
    analyze->add_option("--demo", analyze_demo, "demo record JSON")->required();
    analyze->add_option("--backend", analyze_backend, "rule | mock | remote");
    analyze->add_option("--group", analyze_group, "ablation group: ours | A | B | C");
    analyze->add_option("--domain-out", domain_out, "write the translated PDDL domain here");
    analyze->add_option("--transcript", transcript_path, "transcript file for the mock backend");

    auto* plan_cmd = app.add_subcommand("plan", "generalize a demo plan to a new scene");
    std::string plan_demo_plan, plan_scene;
    plan_cmd->add_option("--demo-plan", plan_demo_plan, "demo task plan JSON")->required();
    plan_cmd->add_option("--scene", plan_scene, "scene configuration JSON")->required();

    auto* exec_cmd = app.add_subcommand("exec", "execute a task plan in the simulator");
    std::string exec_plan, exec_scene, exec_policy = "abort";
    exec_cmd->add_option("--plan", exec_plan, "task plan JSON")->required();
    exec_cmd->add_option("--scene", exec_scene,
                         "scene configuration JSON (defaults to the plan's own scene)");
    exec_cmd->add_option("--policy", exec_policy, "retry_relaxed | skip | abort");

    auto* ground_cmd =
        app.add_subcommand("ground", "fit a success threshold from a wrench trace");
    std::string ground_trace, ground_segments, ground_skill, ground_task = "cable";
    double ground_post_window = 1.0;
    int ground_occurrence = 1;
    ground_cmd->add_option("--trace", ground_trace, "wrench CSV")->required();
    ground_cmd->add_option("--segments", ground_segments, "segments JSON")->required();
    ground_cmd->add_option("--skill", ground_skill, "skill to ground")->required();
    ground_cmd->add_option("--task", ground_task, "cable | cap");
    ground_cmd->add_option("--post-window", ground_post_window, "post window (s)");
    ground_cmd->add_option("--occurrence", ground_occurrence,
                           "which matching segment to use (1-based)");

    auto* eval_cmd = app.add_subcommand("eval", "run the ablation evaluation grid");
    std::string eval_group = "all", eval_task = "all";
    int eval_n = 20;
    eval_cmd->add_option("--group", eval_group, "ours | A | B | C | D | all");
    eval_cmd->add_option("--task", eval_task, "cable | cap | all");
    eval_cmd->add_option("--n", eval_n, "scenes per configuration");

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    StageTimer timer{verbose};
    try {
        if (synth->parsed()) {
            const std::string task = synth_task == "cap" ? "cap_tightening" : "cable_mounting";
            auto scene = sim::builtin_demo_scene(task);
            auto demo = sim::synthesize_demo(scene, sim::ground_truth_script(scene), seed,
                                             profiles_from_config(config_path));
            analyzer::save_demo(demo, out_dir, "demo");
            write_file(out_dir + "/scene.json", scene.to_json().dump(2) + "\n");
            timer.report("synth");
            std::cout << out_dir << "/demo.json\n";
        } else if (segment->parsed()) {
            auto frames = tactile::load_jsonl_file(segment_file);
            tactile::SegmentationParams params;
            params.min_duration = min_dur;
            auto segments = tactile::segment_sequence(frames, params);
            auto arr = nlohmann::json::array();
            for (const auto& s : segments)
                arr.push_back({{"status", to_string(s.status)},
                               {"t_start", s.t_start},
                               {"t_end", s.t_end},
                               {"key_timestamp", s.key_timestamp}});
            timer.report("segment");
            const std::string path = out_dir + "/segments.json";
            write_file(path, arr.dump(2) + "\n");
            std::cout << path << "\n";
        } else if (analyze->parsed()) {
            auto demo = analyzer::load_demo(analyze_demo);
            auto libs = build_builtin_libraries();
            auto lib = libs.at(demo.task == "cable_mounting" ? "cable" : "cap");
            auto opts = analyze_options_from_config(config_path, analyze_group);

            std::unique_ptr<analyzer::ReasonerBackend> backend;
            if (analyze_backend == "rule") {
                backend = std::make_unique<analyzer::RuleBasedBackend>(lib, opts.inference);
            } else if (analyze_backend == "mock") {
                if (transcript_path.empty())
                    throw Error("--backend mock requires --transcript <file>");
                backend =
                    std::make_unique<analyzer::TranscriptBackend>(read_file(transcript_path));
            } else if (analyze_backend == "remote") {
                auto cfg = analyzer::RemoteConfig::from_env();
                if (!cfg) throw Error("remote backend requires ANALYZER_ENDPOINT");
                backend = std::make_unique<RemoteBackend>(*cfg);
            } else {
                throw Error("unknown backend: " + analyze_backend);
            }

            auto analysis = analyzer::analyze_demonstration(demo, lib, *backend, opts);
            timer.report("analyze");
            const std::string plan_path = out_dir + "/demo_plan.json";
            write_file(plan_path, analysis.plan.to_json().dump(2) + "\n");
            if (!domain_out.empty()) write_file(domain_out, pddl::emit(analysis.plan.domain));
            std::cout << plan_path << "\n";
        } else if (plan_cmd->parsed()) {
            auto demo_plan = analyzer::DemoTaskPlan::from_json(load_json(plan_demo_plan));
            auto scene = planner::SceneConfig::from_json(load_json(plan_scene));
            auto tpl = planner::extract_template(demo_plan);
            auto task_plan = planner::plan_new_task(tpl, scene);
            timer.report("plan");
            const std::string path = out_dir + "/task_plan.json";
            write_file(path, task_plan.to_json().dump(2) + "\n");
            std::cout << path << "\n";
        } else if (exec_cmd->parsed()) {
            auto task_plan = planner::TaskPlan::from_json(load_json(exec_plan));
            auto scene = exec_scene.empty()
                             ? task_plan.scene
                             : planner::SceneConfig::from_json(load_json(exec_scene));
            planner::ExecutionPolicy policy;
            policy.on_error = planner::ExecutionPolicy::on_error_from_string(exec_policy);
            sim::SimExecutor executor(task_plan.library, scene, seed,
                                      profiles_from_config(config_path));
            auto result = planner::execute_with_feedback(task_plan, executor, policy);
            timer.report("exec");
            const std::string path = out_dir + "/exec_result.json";
            write_file(path, result.to_json().dump(2) + "\n");
            std::cout << path << "\n";
        } else if (ground_cmd->parsed()) {
            auto trace = ftsig::reduce(ftsig::load_wrench_csv_file(ground_trace));
            auto libs = build_builtin_libraries();
            const auto& lib = *libs.at(ground_task == "cap" ? "cap" : "cable");
            const Skill& skill = lib.resolve(ground_skill);
            const auto cond = ftsig::propose_condition(skill);
            if (!cond.is_resistance())
                throw Error("skill " + ground_skill + " has no resistance condition to ground");
            using K = ConditionExpr::Kind;
            const auto channel = (cond.kind() == K::ResistanceTorqueAbove ||
                                  cond.kind() == K::ResistanceTorqueBelow)
                                     ? ftsig::Channel::Torque
                                     : ftsig::Channel::Force;
            const auto direction = (cond.kind() == K::ResistanceForceBelow ||
                                    cond.kind() == K::ResistanceTorqueBelow)
                                       ? ftsig::ThresholdDirection::Below
                                       : ftsig::ThresholdDirection::Above;

            tactile::Segment active;
            int seen = 0;
            bool found = false;
            for (const auto& s : load_json(ground_segments)) {
                if (status_from_string(s.at("status")) != skill.status_signature) continue;
                if (++seen == ground_occurrence) {
                    active.status = skill.status_signature;
                    active.t_start = s.at("t_start");
                    active.t_end = s.at("t_end");
                    active.key_timestamp = s.at("key_timestamp");
                    found = true;
                    break;
                }
            }
            if (!found)
                throw Error("no segment with status " +
                            std::string(to_string(skill.status_signature)) + " for " +
                            ground_skill);
            const double theta = ftsig::ground_threshold(trace, active, ground_post_window,
                                                         direction, channel);
            timer.report("ground");
            nlohmann::json out{{"skill", ground_skill},
                               {"threshold", theta},
                               {"unit", channel == ftsig::Channel::Force ? "N" : "N*m"},
                               {"segment", {{"t_start", active.t_start},
                                            {"t_end", active.t_end}}}};
            const std::string path = out_dir + "/grounding.json";
            write_file(path, out.dump(2) + "\n");
            std::cout << path << "\n";
        } else if (eval_cmd->parsed()) {
            sim::RunOptions opts;
            opts.seed = seed;
            opts.n_scenes = eval_n;
            opts.profiles = profiles_from_config(config_path);
            sim::EvalReport report;
            std::vector<analyzer::AblationGroup> groups;
            if (eval_group == "all")
                groups = {analyzer::AblationGroup::Ours, analyzer::AblationGroup::A,
                          analyzer::AblationGroup::B, analyzer::AblationGroup::C,
                          analyzer::AblationGroup::D};
            else
                groups = {analyzer::ablation_from_string(eval_group)};
            std::vector<std::string> tasks;
            if (eval_task == "all")
                tasks = {"cable", "cap"};
            else
                tasks = {eval_task};
            for (auto g : groups)
                for (const auto& t : tasks) {
                    report.rows.push_back(sim::run_config(g, t, opts));
                    timer.report("eval " + std::string(analyzer::to_string(g)) + "/" + t);
                }
            const std::string path = out_dir + "/eval.csv";
            write_file(path, report.to_csv());
            std::cout << path << "\n";
        }
    } catch (const Error& e) {
        nlohmann::json err{{"stage", stage}, {"error", "pipeline"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err{{"stage", stage}, {"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
