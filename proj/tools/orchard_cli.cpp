// Command-line front end: synthesize frames, run the perception pipeline,
// evaluate masks, and benchmark.

#include <orchard/orchard.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

orchard::PipelineConfig config_or_default(const std::string& path) {
    if (path.empty()) return orchard::PipelineConfig{};
    return orchard::load_config(path);
}

int run_process(const std::string& frame_dir, const std::string& config_path,
                const std::string& out_dir) {
    const orchard::PipelineConfig cfg = config_or_default(config_path);
    const orchard::FrameResult res = orchard::process_frame_dir(frame_dir, cfg);
    orchard::write_outputs(res, out_dir, cfg);
    int pickable = 0;
    for (const auto& f : res.fruits) pickable += f.can_pick ? 1 : 0;
    std::cout << res.frame_id << ": " << res.fruits.size() << " fruit(s) modeled, " << pickable
              << " pickable, " << res.rejected.size() << " rejected -> " << out_dir << "\n";
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed) {
    const orchard::SceneSpec spec = orchard::load_scene(spec_path);
    const orchard::RenderResult res = orchard::render_frame(spec, out_dir, seed);
    std::int64_t hit = 0;
    for (int y = 0; y < res.frame.depth.height(); ++y)
        for (int x = 0; x < res.frame.depth.width(); ++x)
            if (res.frame.depth(x, y)) ++hit;
    std::cout << "rendered " << res.frame.depth.width() << "x" << res.frame.depth.height()
              << " frame, " << hit << " hit pixel(s), " << res.fruits.size() << " fruit(s) -> "
              << out_dir << "\n";
    return 0;
}

int run_eval(const std::string& pred_dir, const std::string& truth_dir, int classes,
             double iou_threshold, const std::string& json_path) {
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(truth_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().filename());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error("no .png masks in " + truth_dir);

    orchard::ConfusionCounts total = orchard::ConfusionCounts::zeros(classes);
    total.iou_threshold = iou_threshold;
    int pairs = 0;
    for (const fs::path& name : names) {
        const fs::path pred_path = fs::path(pred_dir) / name;
        if (!fs::exists(pred_path))
            throw std::runtime_error("missing prediction for " + name.string() + ": " +
                                     pred_path.string());
        const auto truth = orchard::read_png_mask(fs::path(truth_dir) / name);
        const auto pred = orchard::read_png_mask(pred_path);
        const auto c = orchard::masks_to_counts(pred, truth, classes, iou_threshold);
        for (int i = 0; i < classes; ++i)
            for (int j = 0; j < classes; ++j) total.p[i][j] += c.p[i][j];
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
        ++pairs;
    }

    const orchard::DetectionScores det = orchard::detection_scores(total);
    const auto seg = orchard::miou(total);

    std::printf("mask evaluation: %d image pair(s), %d classes, IoU match threshold %.2f\n", pairs,
                classes, iou_threshold);
    std::printf("  TP %lld  FP %lld  FN %lld\n", static_cast<long long>(total.tp),
                static_cast<long long>(total.fp), static_cast<long long>(total.fn));
    const auto opt = [](const std::optional<double>& v) {
        return v ? std::to_string(*v) : std::string("undefined");
    };
    std::printf("  precision %s\n  recall    %s\n", opt(det.precision).c_str(),
                opt(det.recall).c_str());
    std::printf("  f1        %s\n",
                det.f1_defined ? std::to_string(det.f1).c_str() : "0 (undefined)");
    if (seg) {
        int excluded = 0;
        for (bool inc : seg->class_included) excluded += inc ? 0 : 1;
        std::printf("  miou      %.6f (%d empty class(es) excluded)\n", seg->value, excluded);
    } else {
        std::printf("  miou      undefined (all classes empty)\n");
    }

    nlohmann::json j;
    j["pairs"] = pairs;
    j["classes"] = classes;
    j["iou_threshold"] = iou_threshold;
    j["tp"] = total.tp;
    j["fp"] = total.fp;
    j["fn"] = total.fn;
    j["precision"] = det.precision ? nlohmann::json(*det.precision) : nlohmann::json();
    j["recall"] = det.recall ? nlohmann::json(*det.recall) : nlohmann::json();
    j["f1"] = det.f1_defined ? nlohmann::json(det.f1) : nlohmann::json();
    j["miou"] = seg ? nlohmann::json(seg->value) : nlohmann::json();
    if (json_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(json_path);
        if (!out) throw std::runtime_error("cannot write metrics file: " + json_path);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int run_bench(const std::string& frames_dir, const std::string& config_path) {
    const orchard::PipelineConfig cfg = config_or_default(config_path);
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(frames_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "intrinsics.json"))
            frames.push_back(entry.path());
    std::sort(frames.begin(), frames.end());
    if (frames.empty())
        throw std::runtime_error("no frame directories under " + frames_dir);

    std::map<std::string, std::vector<double>> stages;
    std::vector<std::string> order;
    for (const fs::path& dir : frames) {
        const orchard::FrameResult res = orchard::process_frame_dir(dir, cfg);
        for (const auto& t : res.timing) {
            if (!stages.count(t.name)) order.push_back(t.name);
            stages[t.name].push_back(t.ms);
        }
    }
    std::printf("%zu frame(s)\n%-14s %10s %10s\n", frames.size(), "stage", "mean ms", "p95 ms");
    for (const std::string& name : order) {
        std::vector<double>& v = stages[name];
        std::sort(v.begin(), v.end());
        double mean = 0;
        for (double ms : v) mean += ms;
        mean /= static_cast<double>(v.size());
        const std::size_t idx = (v.size() * 95 + 99) / 100; // ceil(0.95 n)
        const double p95 = v[std::min(v.size() - 1, idx == 0 ? 0 : idx - 1)];
        std::printf("%-14s %10.3f %10.3f\n", name.c_str(), mean, p95);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"apple-harvest perception pipeline"};
    app.require_subcommand(1);

    std::string frame_dir, frames_dir, config_path, out_dir, spec_path, pred_dir, truth_dir,
        json_path;
    std::uint64_t seed = 0;
    int classes = 3;
    double iou_threshold = 0.5;

    CLI::App* process = app.add_subcommand("process", "run the pipeline on one frame directory");
    process->add_option("--frame", frame_dir, "frame directory")->required();
    process->add_option("--config", config_path, "pipeline config file (defaults when omitted)");
    process->add_option("--out", out_dir, "output directory")->required();

    CLI::App* synth = app.add_subcommand("synth", "render a synthetic frame from a scene file");
    synth->add_option("--spec", spec_path, "scene description JSON")->required();
    synth->add_option("--out", out_dir, "output frame directory")->required();
    synth->add_option("--seed", seed, "noise seed");

    CLI::App* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
    eval->add_option("--pred", pred_dir, "directory of predicted masks")->required();
    eval->add_option("--truth", truth_dir, "directory of ground-truth masks")->required();
    eval->add_option("--classes", classes, "number of classes")->required();
    eval->add_option("--iou", iou_threshold, "detection match threshold");
    eval->add_option("--json", json_path, "write the JSON report here instead of stdout");

    CLI::App* bench = app.add_subcommand("bench", "per-stage timing over a set of frames");
    bench->add_option("--frames", frames_dir, "directory of frame directories")->required();
    bench->add_option("--config", config_path, "pipeline config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (process->parsed()) return run_process(frame_dir, config_path, out_dir);
        if (synth->parsed()) return run_synth(spec_path, out_dir, seed);
        if (eval->parsed()) return run_eval(pred_dir, truth_dir, classes, iou_threshold, json_path);
        if (bench->parsed()) return run_bench(frames_dir, config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
