// Minimal usage example: sample a noisy partial sphere, recover it with the
// accumulator, and estimate the approach pose.

#include <orchard/filter.hpp>
#include <orchard/hough.hpp>
#include <orchard/pose.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

int main() {
    const orchard::Point3 true_center(0.40, 0.05, 0.30);
    const double true_radius = 0.040;

    // Visible cap facing +X, e.g. a fruit seen from the work-frame X axis.
    // From half a meter away the camera sees most of the front hemisphere.
    std::mt19937 rng(7);
    std::normal_distribution<double> noise(0.0, 0.002);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<orchard::Point3> points;
    while (points.size() < 600) {
        const double az = u(rng) * std::numbers::pi / 2.5;
        const double el = u(rng) * std::numbers::pi / 2.5;
        const orchard::Point3 dir(std::cos(az) * std::cos(el), std::sin(az) * std::cos(el),
                                  std::sin(el));
        points.push_back(true_center + (true_radius + noise(rng)) * dir);
    }

    orchard::FilterConfig filter;
    const auto candidates = orchard::voxel_downsample(
        orchard::euclidean_denoise(points, filter), filter.downsample_voxel);

    orchard::HoughConfig hough;
    const auto fit = orchard::estimate_sphere(candidates, hough);
    if (!fit) {
        std::puts("no consensus");
        return 1;
    }
    std::printf("true   center (%.3f, %.3f, %.3f)  radius %.3f\n", true_center.x(),
                true_center.y(), true_center.z(), true_radius);
    std::printf("fitted center (%.3f, %.3f, %.3f)  radius %.3f  (%u votes from %zu candidates)\n",
                fit->sphere.center.x(), fit->sphere.center.y(), fit->sphere.center.z(),
                fit->sphere.radius, fit->votes, candidates.size());

    const auto pose = orchard::estimate_pose(candidates, fit->sphere.center);
    if (pose) {
        const auto a = pose->approach_dir();
        std::printf("approach theta %.1f deg, phi %.1f deg, dir (%.3f, %.3f, %.3f)\n",
                    pose->theta * 180 / std::numbers::pi, pose->phi * 180 / std::numbers::pi,
                    a.x(), a.y(), a.z());
    }
    return 0;
}
