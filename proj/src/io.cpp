#include "fnav/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fnav {

namespace {

std::string loc(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IoError(loc(path, line) + ": cannot parse number '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IoError(loc(path, line) + ": cannot parse integer '" + s + "'");
  }
}

// Shortest decimal form that round-trips the exact double.
void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line, line_no)) {
    throw IoError(path + ": empty trajectory file");
  }
  if (line != "t,x,y,z,roll,pitch,yaw") {
    throw IoError(loc(path, line_no) + ": expected header 't,x,y,z,roll,pitch,yaw'");
  }

  Trajectory traj;
  while (next_data_line(in, line, line_no)) {
    const auto f = split_csv(line);
    if (f.size() != 7) {
      throw IoError(loc(path, line_no) + ": expected 7 fields, got " + std::to_string(f.size()));
    }
    Pose p;
    p.t = parse_double(f[0], path, line_no);
    p.position = {parse_double(f[1], path, line_no), parse_double(f[2], path, line_no),
                  parse_double(f[3], path, line_no)};
    p.rpy = {parse_double(f[4], path, line_no), parse_double(f[5], path, line_no),
             parse_double(f[6], path, line_no)};
    if (!traj.poses.empty() && p.t <= traj.poses.back().t) {
      throw IoError(loc(path, line_no) + ": timestamps must be strictly increasing");
    }
    traj.poses.push_back(p);
  }
  if (traj.poses.empty()) throw IoError(path + ": trajectory has no poses");
  traj.validate();
  return traj;
}

void save_trajectory(const std::string& path, const Trajectory& trajectory,
                     const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trajectory file: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "t,x,y,z,roll,pitch,yaw\n";
  for (const Pose& p : trajectory.poses) {
    append_double(buf, p.t);
    for (int i = 0; i < 3; ++i) {
      buf += ',';
      append_double(buf, p.position[i]);
    }
    for (int i = 0; i < 3; ++i) {
      buf += ',';
      append_double(buf, p.rpy[i]);
    }
    buf += '\n';
  }
  out << buf;
}

ScanSet load_scans(const std::string& path, const Trajectory& trajectory, double max_range) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scan file: " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line, line_no)) throw IoError(path + ": empty scan file");
  if (line != "pose_idx,sx,sy,sz,miss") {
    throw IoError(loc(path, line_no) + ": expected header 'pose_idx,sx,sy,sz,miss'");
  }

  std::map<std::size_t, RayBundle> grouped;
  while (next_data_line(in, line, line_no)) {
    const auto f = split_csv(line);
    if (f.size() != 5) {
      throw IoError(loc(path, line_no) + ": expected 5 fields, got " + std::to_string(f.size()));
    }
    const long idx = parse_long(f[0], path, line_no);
    if (idx < 0 || static_cast<std::size_t>(idx) >= trajectory.size()) {
      throw IoError(loc(path, line_no) + ": pose index " + std::to_string(idx) +
                    " out of range [0," + std::to_string(trajectory.size()) + ")");
    }
    const long miss = parse_long(f[4], path, line_no);
    if (miss != 0 && miss != 1) {
      throw IoError(loc(path, line_no) + ": miss flag must be 0 or 1");
    }
    Ray r;
    r.v = {parse_double(f[1], path, line_no), parse_double(f[2], path, line_no),
           parse_double(f[3], path, line_no)};
    r.miss = miss == 1;
    auto& bundle = grouped[static_cast<std::size_t>(idx)];
    bundle.pose_index = static_cast<std::size_t>(idx);
    bundle.rays.push_back(r);
  }

  ScanSet scans;
  scans.max_range = max_range;
  scans.bundles.reserve(grouped.size());
  for (auto& [idx, bundle] : grouped) scans.bundles.push_back(std::move(bundle));
  scans.validate(trajectory);
  return scans;
}

void save_scans(const std::string& path, const ScanSet& scans, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scan file: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "pose_idx,sx,sy,sz,miss\n";
  for (const auto& b : scans.bundles) {
    for (const auto& r : b.rays) {
      buf += std::to_string(b.pose_index);
      for (int i = 0; i < 3; ++i) {
        buf += ',';
        append_double(buf, r.v[i]);
      }
      buf += r.miss ? ",1\n" : ",0\n";
    }
    // Flush periodically to bound memory on large scan sets.
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
};

std::size_t ply_type_size(const std::string& t, const std::string& path) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw IoError(path + ": unsupported PLY property type '" + t + "'");
}

double ply_read_scalar(const char* p, const std::string& t) {
  auto load = [&]<typename T>() {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load.operator()<int8_t>();
  if (t == "uchar" || t == "uint8") return load.operator()<uint8_t>();
  if (t == "short" || t == "int16") return load.operator()<int16_t>();
  if (t == "ushort" || t == "uint16") return load.operator()<uint16_t>();
  if (t == "int" || t == "int32") return load.operator()<int32_t>();
  if (t == "uint" || t == "uint32") return load.operator()<uint32_t>();
  if (t == "float" || t == "float32") return load.operator()<float>();
  return load.operator()<double>();
}

}  // namespace

ScanSet load_scans_ply(const std::string& path, const Trajectory& trajectory, double max_range) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PLY file: " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw IoError(loc(path, line_no) + ": not a PLY file");

  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;
  bool little_endian = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      little_endian = fmt == "binary_little_endian";
      if (!little_endian) throw IoError(loc(path, line_no) + ": only binary_little_endian PLY is supported");
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      in_vertex_element = name == "vertex";
      if (in_vertex_element) vertex_count = count;
      else if (count > 0) throw IoError(loc(path, line_no) + ": unsupported PLY element '" + name + "'");
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      PlyProperty p;
      ss >> p.type >> p.name;
      if (p.type == "list") throw IoError(loc(path, line_no) + ": list properties are not supported");
      props.push_back(p);
    } else if (tok == "end_header") {
      break;
    }
  }

  std::size_t record_size = 0;
  long off_x = -1, off_y = -1, off_z = -1, off_idx = -1;
  std::string type_x, type_y, type_z, type_idx;
  for (const auto& p : props) {
    if (p.name == "x") { off_x = static_cast<long>(record_size); type_x = p.type; }
    if (p.name == "y") { off_y = static_cast<long>(record_size); type_y = p.type; }
    if (p.name == "z") { off_z = static_cast<long>(record_size); type_z = p.type; }
    if (p.name == "pose_idx") { off_idx = static_cast<long>(record_size); type_idx = p.type; }
    record_size += ply_type_size(p.type, path);
  }
  if (off_x < 0 || off_y < 0 || off_z < 0 || off_idx < 0) {
    throw IoError(path + ": PLY must provide x, y, z and pose_idx vertex properties");
  }

  std::vector<char> rec(record_size);
  std::map<std::size_t, RayBundle> grouped;
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!in.read(rec.data(), static_cast<std::streamsize>(record_size))) {
      throw IoError(path + ": truncated PLY payload at vertex " + std::to_string(i));
    }
    const double idx_f = ply_read_scalar(rec.data() + off_idx, type_idx);
    const auto idx = static_cast<long long>(idx_f);
    if (idx < 0 || static_cast<std::size_t>(idx) >= trajectory.size()) {
      throw IoError(path + ": vertex " + std::to_string(i) + " pose index " + std::to_string(idx) +
                    " out of range [0," + std::to_string(trajectory.size()) + ")");
    }
    Ray r;
    r.v = {ply_read_scalar(rec.data() + off_x, type_x), ply_read_scalar(rec.data() + off_y, type_y),
           ply_read_scalar(rec.data() + off_z, type_z)};
    auto& bundle = grouped[static_cast<std::size_t>(idx)];
    bundle.pose_index = static_cast<std::size_t>(idx);
    bundle.rays.push_back(r);
  }

  ScanSet scans;
  scans.max_range = max_range;
  for (auto& [idx, bundle] : grouped) scans.bundles.push_back(std::move(bundle));
  scans.validate(trajectory);
  return scans;
}

void save_scans_ply(const std::string& path, const ScanSet& scans) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PLY file: " + path);

  std::size_t n = 0;
  for (const auto& b : scans.bundles) {
    for (const auto& r : b.rays) {
      if (!r.miss) ++n;
    }
  }
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << n << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uint pose_idx\nend_header\n";
  for (const auto& b : scans.bundles) {
    const auto idx = static_cast<uint32_t>(b.pose_index);
    for (const auto& r : b.rays) {
      if (r.miss) continue;
      double xyz[3] = {r.v.x(), r.v.y(), r.v.z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      out.write(reinterpret_cast<const char*>(&idx), sizeof(idx));
    }
  }
}

}  // namespace fnav
