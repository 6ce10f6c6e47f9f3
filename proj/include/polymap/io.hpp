#pragma once

// File formats for depth frames, intrinsics and poses.
//
// Depth frame ("PMDI"): 16-byte header followed by width*height little-endian
// uint16 samples in millimetres, row-major, 0 = invalid.
//
//   offset  size  field
//   0       4     magic "PMDI"
//   4       4     uint32 width   (little-endian)
//   8       4     uint32 height  (little-endian)
//   12      4     uint32 reserved, written as 0
//
// Depths are rounded to the nearest millimetre; values that do not fit in
// 1..65535 mm are written as invalid.
//
// JSON:
//   intrinsics  {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..}
//   pose        {"t":[x,y,z],"q":[w,x,y,z]}

#include "polymap/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace polymap {

using Json = nlohmann::json;

std::vector<std::uint8_t> encode_depth(const DepthImage& img);
/// Throws ValidationError on bad magic, truncated payload or size mismatch.
DepthImage decode_depth(const std::vector<std::uint8_t>& bytes);

void write_depth_file(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_depth_file(const std::filesystem::path& path);

Json to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const Json& j);

Json to_json(const Pose& pose);
Pose pose_from_json(const Json& j);

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

/// Reads a whole JSON document; throws ValidationError on parse errors.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Reads JSON Lines, skipping blank lines.
std::vector<Json> read_jsonl_file(const std::filesystem::path& path);

}  // namespace polymap
