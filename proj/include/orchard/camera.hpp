#pragma once

#include "orchard/geometry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace orchard {

/// Ideal pinhole model, zero distortion. depth_scale converts stored depth
/// units to metres (0.001 for millimetre depth images).
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    double depth_scale = 0.001;

    bool valid() const {
        return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height &&
               depth_scale > 0.0;
    }

    void validate() const {
        if (!valid()) throw std::invalid_argument("CameraIntrinsics: invalid parameters");
    }
};

/// Back-projects pixel (u, v) with depth d (in depth units, fractional values
/// allowed) into the camera frame. d must be positive; zero depth means "no
/// measurement" and such pixels are skipped by callers.
inline Point3 backproject(double u, double v, double d, const CameraIntrinsics& intr) {
    const double z = d * intr.depth_scale;
    return Point3{(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

/// Same ray math with the depth already in metres.
inline Point3 backproject_z(double u, double v, double z, const CameraIntrinsics& intr) {
    return Point3{(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

inline nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr) {
    return nlohmann::json{{"fx", intr.fx},       {"fy", intr.fy},
                          {"cx", intr.cx},       {"cy", intr.cy},
                          {"width", intr.width}, {"height", intr.height},
                          {"depth_scale", intr.depth_scale}};
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
    CameraIntrinsics intr;
    intr.fx = j.at("fx").get<double>();
    intr.fy = j.at("fy").get<double>();
    intr.cx = j.at("cx").get<double>();
    intr.cy = j.at("cy").get<double>();
    intr.width = j.at("width").get<int>();
    intr.height = j.at("height").get<int>();
    intr.depth_scale = j.at("depth_scale").get<double>();
    return intr;
}

inline CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open intrinsics file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        CameraIntrinsics intr = intrinsics_from_json(j);
        intr.validate();
        return intr;
    } catch (const std::exception& e) {
        throw std::runtime_error("bad intrinsics file " + path.string() + ": " + e.what());
    }
}

inline void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& intr) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write intrinsics file: " + path.string());
    out << intrinsics_to_json(intr).dump(2) << "\n";
}

} // namespace orchard
