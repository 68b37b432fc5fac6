#include "fnav/formats.hpp"

#include "fnav/io.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fnav {

namespace {

constexpr char kGridMagic[5] = {'U', 'A', 'O', 'G', '1'};

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError("truncated binary file: " + path);
  }
  return v;
}

}  // namespace

void save_grid(const std::string& path, const OccupancyGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write grid file: " + path);
  out.write(kGridMagic, sizeof(kGridMagic));
  const GridSpec& spec = grid.spec();
  for (int i = 0; i < 3; ++i) write_raw(out, spec.origin[i]);
  write_raw(out, spec.voxel_size);
  write_raw(out, static_cast<uint32_t>(spec.nx));
  write_raw(out, static_cast<uint32_t>(spec.ny));
  write_raw(out, static_cast<uint32_t>(spec.nz));
  write_raw(out, grid.sensor().p_min);
  write_raw(out, grid.sensor().p_max);

  const std::size_t n = spec.voxel_count();
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<float>(grid.log_odds(i));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(n * sizeof(float)));

  std::vector<uint8_t> mask((n + 7) / 8, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.observed(i)) mask[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  }
  out.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
}

OccupancyGrid load_grid(const std::string& path, const SensorModel& sensor) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file: " + path);
  char magic[5];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) {
    throw IoError("not a UAOG1 grid file: " + path);
  }
  GridSpec spec;
  for (int i = 0; i < 3; ++i) spec.origin[i] = read_raw<double>(in, path);
  spec.voxel_size = read_raw<double>(in, path);
  spec.nx = static_cast<int>(read_raw<uint32_t>(in, path));
  spec.ny = static_cast<int>(read_raw<uint32_t>(in, path));
  spec.nz = static_cast<int>(read_raw<uint32_t>(in, path));
  SensorModel model = sensor;
  model.p_min = read_raw<double>(in, path);
  model.p_max = read_raw<double>(in, path);

  OccupancyGrid grid(spec, model);
  const std::size_t n = spec.voxel_count();
  std::vector<float> values(n);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
    throw IoError("truncated grid payload: " + path);
  }
  std::vector<uint8_t> mask((n + 7) / 8);
  if (!in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size()))) {
    throw IoError("truncated grid mask: " + path);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i / 8] & (1u << (i % 8))) {
      const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(values[i])));
      grid.set_probability(i, p);
    }
  }
  return grid;
}

void save_grid_csv(const std::string& path, const OccupancyGrid& grid, int z_slice,
                   const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write grid CSV: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "ix,iy,iz,probability\n";
  const GridSpec& spec = grid.spec();
  const int z0 = z_slice < 0 ? 0 : z_slice;
  const int z1 = z_slice < 0 ? spec.nz : z_slice + 1;
  for (int iz = z0; iz < z1; ++iz) {
    for (int iy = 0; iy < spec.ny; ++iy) {
      for (int ix = 0; ix < spec.nx; ++ix) {
        const Cell3 c{ix, iy, iz};
        if (!grid.observed(c)) continue;
        buf += std::to_string(ix) + ',' + std::to_string(iy) + ',' + std::to_string(iz) + ',';
        append_double(buf, grid.probability(c));
        buf += '\n';
        if (buf.size() > (1u << 20)) {
          out << buf;
          buf.clear();
        }
      }
    }
  }
  out << buf;
}

void save_ground_pgm(const std::string& path, const GroundHeightMap& map) {
  double lo = map.heights.empty() ? 0.0 : map.heights[0];
  double hi = lo;
  for (double h : map.heights) {
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  const double span = hi > lo ? hi - lo : 1.0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PGM: " + path);
  out << "P5\n# height scale: min=" << lo << " max=" << hi << " (meters)\n"
      << map.width << " " << map.height << "\n65535\n";
  for (int iy = map.height - 1; iy >= 0; --iy) {  // top row first
    for (int ix = 0; ix < map.width; ++ix) {
      const double h = map.heights[map.index(ix, iy)];
      const auto q = static_cast<uint16_t>(std::lround((h - lo) / span * 65535.0));
      const uint8_t bytes[2] = {static_cast<uint8_t>(q >> 8), static_cast<uint8_t>(q & 0xff)};
      out.write(reinterpret_cast<const char*>(bytes), 2);
    }
  }
}

void save_ground_csv(const std::string& path, const GroundHeightMap& map,
                     const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write ground CSV: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "# origin=";
  append_double(buf, map.origin.x());
  buf += ',';
  append_double(buf, map.origin.y());
  buf += " cell_size=";
  append_double(buf, map.cell_size);
  buf += "\nix,iy,height,source\n";
  for (int iy = 0; iy < map.height; ++iy) {
    for (int ix = 0; ix < map.width; ++ix) {
      buf += std::to_string(ix) + ',' + std::to_string(iy) + ',';
      append_double(buf, map.heights[map.index(ix, iy)]);
      buf += map.source[map.index(ix, iy)] == CellSource::measured ? ",measured\n" : ",virtual\n";
      if (buf.size() > (1u << 20)) {
        out << buf;
        buf.clear();
      }
    }
  }
  out << buf;
}

void save_obstruction_csv(const std::string& path, const ObstructionMap& map,
                          const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write obstruction CSV: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "# origin=";
  append_double(buf, map.origin.x());
  buf += ',';
  append_double(buf, map.origin.y());
  buf += " cell_size=";
  append_double(buf, map.cell_size);
  buf += " width=" + std::to_string(map.width) + " height=" + std::to_string(map.height);
  buf += "\nix,iy,b,ground_z\n";
  for (int iy = 0; iy < map.height; ++iy) {
    for (int ix = 0; ix < map.width; ++ix) {
      buf += std::to_string(ix) + ',' + std::to_string(iy) + ',';
      append_double(buf, map.scores[map.index(ix, iy)]);
      buf += ',';
      append_double(buf, map.ground.heights[map.ground.index(ix, iy)]);
      buf += '\n';
      if (buf.size() > (1u << 20)) {
        out << buf;
        buf.clear();
      }
    }
  }
  out << buf;
}

ObstructionMap load_obstruction_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open obstruction CSV: " + path);

  ObstructionMap map;
  bool have_geometry = false;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::tuple<int, int, double, double>> rows;
  int max_ix = -1, max_iy = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      double ox, oy, cs;
      int w, h;
      if (std::sscanf(line.c_str(), "# origin=%lf,%lf cell_size=%lf width=%d height=%d", &ox, &oy,
                      &cs, &w, &h) == 5) {
        map.origin = {ox, oy};
        map.cell_size = cs;
        map.width = w;
        map.height = h;
        have_geometry = true;
      }
      continue;
    }
    if (!header_seen) {
      if (line != "ix,iy,b,ground_z") {
        throw IoError(path + ":" + std::to_string(line_no) + ": expected header 'ix,iy,b,ground_z'");
      }
      header_seen = true;
      continue;
    }
    int ix, iy;
    double b, gz;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &ix, &iy, &b, &gz) != 4) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed record");
    }
    rows.emplace_back(ix, iy, b, gz);
    max_ix = std::max(max_ix, ix);
    max_iy = std::max(max_iy, iy);
  }
  if (rows.empty()) throw IoError(path + ": no obstruction records");
  if (!have_geometry) {
    map.width = max_ix + 1;
    map.height = max_iy + 1;
  }
  const std::size_t n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  map.scores.assign(n, 0.5);
  map.ground.origin = map.origin;
  map.ground.cell_size = map.cell_size;
  map.ground.width = map.width;
  map.ground.height = map.height;
  map.ground.heights.assign(n, 0.0);
  map.ground.source.assign(n, CellSource::measured);
  for (const auto& [ix, iy, b, gz] : rows) {
    if (ix < 0 || ix >= map.width || iy < 0 || iy >= map.height) {
      throw IoError(path + ": cell index out of declared bounds");
    }
    map.scores[map.index(ix, iy)] = b;
    map.ground.heights[map.ground.index(ix, iy)] = gz;
  }
  map.b_min = map.recompute_b_min();
  return map;
}

namespace {

constexpr char kObstMagic[5] = {'O', 'B', 'S', 'T', '1'};

}

void save_obstruction_bin(const std::string& path, const ObstructionMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write obstruction file: " + path);
  out.write(kObstMagic, sizeof(kObstMagic));
  write_raw(out, map.origin.x());
  write_raw(out, map.origin.y());
  write_raw(out, map.cell_size);
  write_raw(out, static_cast<uint32_t>(map.width));
  write_raw(out, static_cast<uint32_t>(map.height));
  out.write(reinterpret_cast<const char*>(map.scores.data()),
            static_cast<std::streamsize>(map.scores.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(map.ground.heights.data()),
            static_cast<std::streamsize>(map.ground.heights.size() * sizeof(double)));
  for (CellSource s : map.ground.source) write_raw(out, static_cast<uint8_t>(s));
}

ObstructionMap load_obstruction_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open obstruction file: " + path);
  char magic[5];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kObstMagic, sizeof(magic)) != 0) {
    throw IoError("not an OBST1 file: " + path);
  }
  ObstructionMap map;
  map.origin.x() = read_raw<double>(in, path);
  map.origin.y() = read_raw<double>(in, path);
  map.cell_size = read_raw<double>(in, path);
  map.width = static_cast<int>(read_raw<uint32_t>(in, path));
  map.height = static_cast<int>(read_raw<uint32_t>(in, path));
  const std::size_t n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  map.scores.resize(n);
  if (!in.read(reinterpret_cast<char*>(map.scores.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw IoError("truncated obstruction payload: " + path);
  }
  map.ground.origin = map.origin;
  map.ground.cell_size = map.cell_size;
  map.ground.width = map.width;
  map.ground.height = map.height;
  map.ground.heights.resize(n);
  if (!in.read(reinterpret_cast<char*>(map.ground.heights.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw IoError("truncated obstruction heights: " + path);
  }
  map.ground.source.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    map.ground.source[i] = static_cast<CellSource>(read_raw<uint8_t>(in, path));
  }
  map.b_min = map.recompute_b_min();
  return map;
}

namespace {

// Free cells render green, uncertain blue, obstructed yellow-to-red.
void score_color(double b, unsigned char* rgb) {
  auto lerp = [](double a, double z, double t) { return a + (z - a) * t; };
  double r, g, bl;
  if (b <= 0.45) {
    const double t = b / 0.45;
    r = lerp(30, 40, t);
    g = lerp(180, 90, t);
    bl = lerp(60, 220, t);
  } else if (b <= 0.55) {
    r = 40;
    g = 90;
    bl = 220;
  } else {
    const double t = (b - 0.55) / 0.45;
    r = lerp(230, 200, t);
    g = lerp(200, 20, t);
    bl = lerp(40, 30, t);
  }
  rgb[0] = static_cast<unsigned char>(r);
  rgb[1] = static_cast<unsigned char>(g);
  rgb[2] = static_cast<unsigned char>(bl);
}

}  // namespace

void save_obstruction_png(const std::string& path, const ObstructionMap& map) {
  std::vector<unsigned char> rgb(static_cast<std::size_t>(map.width) * map.height * 3);
  for (int iy = 0; iy < map.height; ++iy) {
    for (int ix = 0; ix < map.width; ++ix) {
      // Image rows run top to bottom; map rows bottom to top.
      const std::size_t px = (static_cast<std::size_t>(map.height - 1 - iy) * map.width + ix) * 3;
      score_color(map.scores[map.index(ix, iy)], &rgb[px]);
    }
  }
  write_png_rgb8(path, map.width, map.height, rgb);
}

void write_png_rgb8(const std::string& path, int width, int height,
                    std::span<const unsigned char> rgb) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write PNG: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw IoError("libpng failure while writing " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void save_path_csv(const std::string& path, const Path& p, const ObstructionMap& map,
                   const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write path CSV: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "# total_cost=";
  append_double(buf, p.total_cost);
  buf += "\nix,iy,world_x,world_y\n";
  for (const Cell2& c : p.cells) {
    const Vec2 w = map.cell_center(c);
    buf += std::to_string(c.x()) + ',' + std::to_string(c.y()) + ',';
    append_double(buf, w.x());
    buf += ',';
    append_double(buf, w.y());
    buf += '\n';
  }
  out << buf;
}

void save_mission_csv(const std::string& path, std::span<const MissionRecord> records,
                      const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write mission CSV: " + path);
  std::string buf;
  if (!comment.empty()) buf += "# " + comment + "\n";
  buf += "run_id,pair_id,mode,cost,length,replans,success\n";
  for (const MissionRecord& r : records) {
    buf += r.run_id + ',' + std::to_string(r.pair_id) + ',' + r.mode + ',' + r.cost + ',';
    append_double(buf, r.length_m);
    buf += ',' + std::to_string(r.replans) + ',' + (r.success ? "1" : "0") + '\n';
  }
  out << buf;
}

}  // namespace fnav
