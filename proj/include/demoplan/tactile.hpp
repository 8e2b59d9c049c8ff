#pragma once

// Vector-field analytics over tactile marker-displacement frames: per-frame
// radial/tangential/coherence features, status classification for the four
// contact patterns plus idle, temporal smoothing and change-point
// segmentation, and a synthetic sequence generator for all patterns.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "demoplan/core.hpp"
#include "demoplan/skill.hpp"
#include "json.hpp"

namespace demoplan::tactile {

class EmptySequence : public Error {
public:
    EmptySequence() : Error("tactile sequence is empty") {}
};

/// One tactile frame: an HxW grid of 2-D marker displacement vectors in
/// millimeters, with normalized cell-center coordinates in [-1,1]^2.
struct TactileFrame {
    int rows = 0;
    int cols = 0;
    std::vector<Vec2> grid;         // row-major, rows*cols entries
    std::vector<Vec2> grid_coords;  // matching cell centers
    double timestamp = 0.0;         // seconds

    void validate() const {
        if (rows < 3 || cols < 3) throw Error("tactile grid must be at least 3x3");
        if (grid.size() != static_cast<std::size_t>(rows * cols) ||
            grid_coords.size() != grid.size())
            throw Error("tactile grid size mismatch");
        for (const auto& v : grid)
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                throw Error("tactile vector components must be finite");
    }

    static std::vector<Vec2> regular_coords(int rows, int cols) {
        std::vector<Vec2> out;
        out.reserve(static_cast<std::size_t>(rows) * cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                out.push_back({cols > 1 ? -1.0 + 2.0 * c / (cols - 1) : 0.0,
                               rows > 1 ? -1.0 + 2.0 * r / (rows - 1) : 0.0});
        return out;
    }
};

using TactileSequence = std::vector<TactileFrame>;

/// Scalar summary of one frame. All scores are magnitude-normalized:
/// radial and tangential lie in [-1,1], coherence in [0,1]; a zero field
/// scores zero everywhere.
struct FieldFeatures {
    double mean_magnitude = 0.0;  // m, millimeters
    double radial_score = 0.0;    // d: +1 pure source, -1 pure sink
    double tangential_score = 0.0;  // k: +-1 pure rotation
    double coherence = 0.0;         // c: 1 for a uniform field
};

inline FieldFeatures features(const TactileFrame& frame) {
    frame.validate();
    const auto n = static_cast<double>(frame.grid.size());
    double sum_mag = 0.0, sum_radial = 0.0, sum_tangential = 0.0;
    Vec2 sum_vec;
    for (std::size_t i = 0; i < frame.grid.size(); ++i) {
        const Vec2& v = frame.grid[i];
        sum_mag += v.norm();
        sum_vec = sum_vec + v;
        const Vec2 radial = frame.grid_coords[i].normalized();  // zero at the center cell
        sum_radial += v.dot(radial);
        sum_tangential += v.dot(radial.rot90());
    }
    FieldFeatures f;
    f.mean_magnitude = sum_mag / n;
    if (f.mean_magnitude <= 0.0) return f;
    f.radial_score = (sum_radial / n) / f.mean_magnitude;
    f.tangential_score = (sum_tangential / n) / f.mean_magnitude;
    f.coherence = (sum_vec * (1.0 / n)).norm() / f.mean_magnitude;
    return f;
}

struct ClassifierParams {
    double idle_threshold = 0.05;       // mm, mean-magnitude floor
    double coherence_threshold = 0.8;   // uniform-flow gate
    double tangential_threshold = 0.5;  // twisted-flow gate
    double radial_threshold = 0.5;      // source/sink gate

    void validate() const {
        if (idle_threshold <= 0 || coherence_threshold <= 0 || tangential_threshold <= 0 ||
            radial_threshold <= 0)
            throw Error("classifier thresholds must be positive");
    }
};

/// Decision ladder over the field features. Sourcing -> Grasped, sinking ->
/// Released, uniform flow -> LinearForce, twisted flow -> Torque; anything
/// unconvincing is Ambiguous and left to temporal smoothing.
inline ObjectStatus classify(const TactileFrame& frame, const ClassifierParams& params = {}) {
    params.validate();
    const FieldFeatures f = features(frame);
    if (f.mean_magnitude < params.idle_threshold) return ObjectStatus::Idle;
    if (f.coherence >= params.coherence_threshold) return ObjectStatus::LinearForce;
    const double k = std::abs(f.tangential_score);
    if (k >= params.tangential_threshold && k > std::abs(f.radial_score))
        return ObjectStatus::Torque;
    if (f.radial_score >= params.radial_threshold) return ObjectStatus::Grasped;
    if (f.radial_score <= -params.radial_threshold) return ObjectStatus::Released;
    return ObjectStatus::Ambiguous;
}

/// Maximal run of one object status. key_timestamp is the moment the new
/// interaction begins (the segment start).
struct Segment {
    ObjectStatus status = ObjectStatus::Idle;
    double t_start = 0.0;
    double t_end = 0.0;
    double key_timestamp = 0.0;
};

struct SegmentationParams {
    ClassifierParams classifier;
    int vote_window = 5;        // frames, centered majority vote
    double min_duration = 0.3;  // seconds; shorter runs merge into a neighbor
};

inline std::vector<Segment> segment_sequence(const TactileSequence& frames,
                                             const SegmentationParams& params = {}) {
    if (frames.empty()) throw EmptySequence();

    const std::size_t n = frames.size();
    std::vector<ObjectStatus> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = classify(frames[i], params.classifier);

    // Centered sliding majority vote.
    std::vector<ObjectStatus> voted(n);
    const int half = std::max(0, params.vote_window / 2);
    for (std::size_t i = 0; i < n; ++i) {
        int counts[6] = {0, 0, 0, 0, 0, 0};
        const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        for (std::size_t k = lo; k <= hi; ++k) ++counts[static_cast<int>(raw[k])];
        int best = static_cast<int>(raw[i]);
        for (int s = 0; s < 6; ++s)
            if (counts[s] > counts[best]) best = s;
        voted[i] = static_cast<ObjectStatus>(best);
    }

    // Hysteresis: Ambiguous resolves to the previous settled status; a
    // leading ambiguous stretch adopts the first settled one.
    std::vector<ObjectStatus> settled = voted;
    ObjectStatus first = ObjectStatus::Idle;
    for (std::size_t i = 0; i < n; ++i)
        if (settled[i] != ObjectStatus::Ambiguous) {
            first = settled[i];
            break;
        }
    ObjectStatus prev = first;
    for (std::size_t i = 0; i < n; ++i) {
        if (settled[i] == ObjectStatus::Ambiguous)
            settled[i] = prev;
        else
            prev = settled[i];
    }

    // Runs shorter than min_duration merge into the neighboring run.
    struct Run {
        ObjectStatus status;
        std::size_t begin;  // [begin, end)
        std::size_t end;
    };
    auto build_runs = [&]() {
        std::vector<Run> runs;
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j < n && settled[j] == settled[i]) ++j;
            runs.push_back({settled[i], i, j});
            i = j;
        }
        return runs;
    };
    auto run_duration = [&](const Run& r) {
        const double start = frames[r.begin].timestamp;
        const double stop =
            r.end < n ? frames[r.end].timestamp
                      : frames[n - 1].timestamp +
                            (n > 1 ? frames[n - 1].timestamp - frames[n - 2].timestamp : 0.0);
        return stop - start;
    };

    auto runs = build_runs();
    while (runs.size() > 1) {
        std::size_t shortest = runs.size();
        for (std::size_t r = 0; r < runs.size(); ++r)
            if (run_duration(runs[r]) < params.min_duration) {
                shortest = r;
                break;
            }
        if (shortest == runs.size()) break;
        const Run& victim = runs[shortest];
        const ObjectStatus absorb =
            shortest > 0 ? runs[shortest - 1].status : runs[shortest + 1].status;
        for (std::size_t i = victim.begin; i < victim.end; ++i) settled[i] = absorb;
        runs = build_runs();
    }

    std::vector<Segment> out;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        Segment s;
        s.status = runs[r].status;
        s.t_start = frames[runs[r].begin].timestamp;
        s.t_end = r + 1 < runs.size()
                      ? frames[runs[r + 1].begin].timestamp
                      : frames[n - 1].timestamp +
                            (n > 1 ? frames[n - 1].timestamp - frames[n - 2].timestamp : 0.0);
        s.key_timestamp = s.t_start;
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic pattern generator

/// Deterministic synthetic tactile sequence for one status. Grasped is an
/// outward radial field, Released inward, LinearForce a uniform direction
/// drawn from the seed, Torque tangential, Idle noise only.
inline TactileSequence synthesize_pattern(ObjectStatus status, double duration, double fps,
                                          double noise_sigma, std::uint64_t seed,
                                          double t0 = 0.0, int rows = 11, int cols = 11,
                                          double amplitude = 1.0) {
    if (duration <= 0.0) throw Error("pattern duration must be positive");
    if (fps <= 0.0) throw Error("fps must be positive");

    auto rng = seeded_rng(seed, 0x7ac71e);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * 3.14159265358979323846);
    const double angle = angle_dist(rng);
    const Vec2 flow{std::cos(angle), std::sin(angle)};

    const auto coords = TactileFrame::regular_coords(rows, cols);
    const auto n_frames = static_cast<std::size_t>(std::llround(duration * fps));

    TactileSequence seq;
    seq.reserve(n_frames);
    for (std::size_t fi = 0; fi < n_frames; ++fi) {
        TactileFrame f;
        f.rows = rows;
        f.cols = cols;
        f.grid_coords = coords;
        f.timestamp = t0 + static_cast<double>(fi) / fps;
        f.grid.reserve(coords.size());
        for (const auto& p : coords) {
            Vec2 v;
            switch (status) {
                case ObjectStatus::Grasped: v = p * amplitude; break;
                case ObjectStatus::Released: v = p * -amplitude; break;
                case ObjectStatus::Torque: v = p.rot90() * amplitude; break;
                case ObjectStatus::LinearForce: v = flow * amplitude; break;
                default: break;  // Idle: noise only
            }
            if (noise_sigma > 0.0)
                v = v + Vec2{gauss(rng) * noise_sigma, gauss(rng) * noise_sigma};
            f.grid.push_back(v);
        }
        seq.push_back(std::move(f));
    }
    return seq;
}

struct ScheduleEntry {
    ObjectStatus status;
    double duration;  // seconds
};

/// Concatenates per-status patterns into one continuous sequence.
inline TactileSequence synthesize_schedule(const std::vector<ScheduleEntry>& schedule, double fps,
                                           double noise_sigma, std::uint64_t seed,
                                           double t0 = 0.0) {
    TactileSequence out;
    double t = t0;
    std::uint64_t salt = 1;
    for (const auto& entry : schedule) {
        auto part = synthesize_pattern(entry.status, entry.duration, fps, noise_sigma,
                                       seed * 131 + salt, t);
        out.insert(out.end(), part.begin(), part.end());
        t += entry.duration;
        ++salt;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON-lines serialization: one frame per line with timestamp, grid shape
// and the flat vector array.

inline void save_jsonl(const TactileSequence& seq, std::ostream& out) {
    for (const auto& f : seq) {
        nlohmann::json j;
        j["t"] = f.timestamp;
        j["h"] = f.rows;
        j["w"] = f.cols;
        auto arr = nlohmann::json::array();
        for (const auto& v : f.grid) {
            arr.push_back(v.x);
            arr.push_back(v.y);
        }
        j["v"] = arr;
        out << j.dump() << "\n";
    }
}

inline void save_jsonl(const TactileSequence& seq, const std::string& path) {
    std::ofstream out(path);
    if (!out.good()) throw Error("cannot write tactile file: " + path);
    save_jsonl(seq, out);
}

inline TactileSequence load_jsonl(std::istream& in) {
    TactileSequence seq;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        TactileFrame f;
        f.timestamp = j.at("t");
        f.rows = j.at("h");
        f.cols = j.at("w");
        const auto& arr = j.at("v");
        for (std::size_t i = 0; i + 1 < arr.size(); i += 2)
            f.grid.push_back({arr[i].get<double>(), arr[i + 1].get<double>()});
        f.grid_coords = TactileFrame::regular_coords(f.rows, f.cols);
        f.validate();
        seq.push_back(std::move(f));
    }
    return seq;
}

inline TactileSequence load_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error("cannot read tactile file: " + path);
    return load_jsonl(in);
}

}  // namespace demoplan::tactile
