#include "polymap/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace polymap {
namespace {

constexpr char kMagic[4] = {'P', 'M', 'D', 'I'};
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

double number(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(std::string("json: missing numeric key '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

std::vector<std::uint8_t> encode_depth(const DepthImage& img) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 2 * img.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  put_u32(out, 0);
  for (double d : img.data()) {
    const double mm = std::round(d * 1000.0);
    const std::uint16_t s = (mm >= 1.0 && mm <= 65535.0) ? static_cast<std::uint16_t>(mm) : 0;
    out.push_back(static_cast<std::uint8_t>(s & 0xFFu));
    out.push_back(static_cast<std::uint8_t>(s >> 8));
  }
  return out;
}

DepthImage decode_depth(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ValidationError("depth file: bad magic");
  }
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != kHeaderSize + 2 * n) {
    throw ValidationError("depth file: payload size does not match " + std::to_string(w) + "x" + std::to_string(h));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t s = static_cast<std::uint16_t>(bytes[kHeaderSize + 2 * i] |
                                                       (bytes[kHeaderSize + 2 * i + 1] << 8));
    data[i] = s / 1000.0;
  }
  return DepthImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

void write_depth_file(const std::filesystem::path& path, const DepthImage& img) {
  const auto bytes = encode_depth(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DepthImage read_depth_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open depth file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_depth(bytes);
}

Json to_json(const CameraIntrinsics& intr) {
  return Json{{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx},
              {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

CameraIntrinsics intrinsics_from_json(const Json& j) {
  CameraIntrinsics intr;
  intr.fx = number(j, "fx");
  intr.fy = number(j, "fy");
  intr.cx = number(j, "cx");
  intr.cy = number(j, "cy");
  intr.width = static_cast<int>(number(j, "width"));
  intr.height = static_cast<int>(number(j, "height"));
  intr.validate();
  return intr;
}

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("json: expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const Pose& pose) {
  const Eigen::Quaterniond q = pose.rotation.quaternion();
  return Json{{"t", to_json(pose.translation)}, {"q", Json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Pose pose_from_json(const Json& j) {
  if (!j.contains("t") || !j.contains("q")) throw ValidationError("pose json: needs 't' and 'q'");
  const Json& q = j.at("q");
  if (!q.is_array() || q.size() != 4) throw ValidationError("pose json: 'q' must be [w,x,y,z]");
  Pose p;
  p.translation = vec3_from_json(j.at("t"));
  p.rotation = Rotation::from_quaternion(
      Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()));
  return p;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

std::vector<Json> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace polymap
