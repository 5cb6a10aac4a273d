// End-to-end example: render a small orchard scene, run the pipeline, and
// print the resulting pick list.

#include <orchard/orchard.hpp>

#include <cstdio>
#include <filesystem>

int main() {
    orchard::SceneSpec scene;
    scene.intrinsics = {525.0, 525.0, 319.5, 239.5, 640, 480, 0.001};
    scene.noise_sigma = 0.002;
    scene.fruits.push_back({1, {-0.06, 0.00, 0.40}, 0.040});
    scene.fruits.push_back({2, {0.06, 0.02, 0.42}, 0.040});
    // Branch crossing the second apple's line of approach.
    scene.branches.push_back({{-0.02, 0.02, 0.35}, {0.16, 0.02, 0.35}, 0.008});
    // Trellis post well off to the side.
    scene.boxes.push_back({{-0.30, -0.20, 0.30}, {-0.26, 0.25, 0.36}});

    const auto dir = std::filesystem::temp_directory_path() / "orchard_demo_frame";
    orchard::render_frame(scene, dir, 42);
    std::printf("frame written to %s\n", dir.c_str());

    orchard::PipelineConfig cfg;
    const orchard::FrameResult res = orchard::process_frame_dir(dir, cfg);
    orchard::write_outputs(res, dir / "out", cfg);

    for (const auto& f : res.fruits) {
        const std::string note = f.rejection.empty() ? "" : " (" + f.rejection + ")";
        std::printf("fruit %u: center (%.3f, %.3f, %.3f) r %.3f  confidence %.3f  %s%s\n", f.id,
                    f.sphere.center.x(), f.sphere.center.y(), f.sphere.center.z(),
                    f.sphere.radius, f.confidence, f.can_pick ? "pick" : "skip", note.c_str());
    }
    for (const auto& r : res.rejected)
        std::printf("fruit %u rejected: %s\n", r.id, r.reason.c_str());
    std::printf("pick list at %s\n", (dir / "out" / "pick_list.json").c_str());
    return 0;
}
