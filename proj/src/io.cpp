#include "pseudobox/io.hpp"

#include <cctype>
#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pseudobox/error.hpp"

namespace pbox::io {

namespace {

static_assert(std::endian::native == std::endian::little, "EMB1 I/O assumes a little-endian host");

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open file");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open file for writing");
  return out;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const fs::path& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw IoError(path.string(), "truncated PGM header");
  return tok;
}

long parse_long(const std::string& s, const fs::path& path, const char* what) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string(), std::string("malformed ") + what + " '" + s + "'");
  }
}

template <typename T>
T read_le(std::istream& in, const fs::path& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError(path.string(), "truncated binary file");
  }
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

PgmImage read_pgm(const fs::path& path) {
  auto in = open_in(path);
  if (pgm_token(in, path) != "P5") throw IoError(path.string(), "not a binary PGM (P5)");
  PgmImage img;
  img.width = static_cast<int>(parse_long(pgm_token(in, path), path, "width"));
  img.height = static_cast<int>(parse_long(pgm_token(in, path), path, "height"));
  const long maxval = parse_long(pgm_token(in, path), path, "maxval");
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError(path.string(), "invalid PGM header values");
  }
  img.maxval = static_cast<std::uint32_t>(maxval);
  const size_t n = static_cast<size_t>(img.width) * img.height;
  img.samples.resize(n);
  if (img.maxval > 255) {
    std::vector<unsigned char> buf(n * 2);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw IoError(path.string(), "truncated PGM raster");
    }
    for (size_t i = 0; i < n; ++i) {
      img.samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    }
  } else {
    std::vector<unsigned char> buf(n);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw IoError(path.string(), "truncated PGM raster");
    }
    for (size_t i = 0; i < n; ++i) img.samples[i] = buf[i];
  }
  return img;
}

void write_pgm(const fs::path& path, const PgmImage& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
  const size_t n = static_cast<size_t>(image.width) * image.height;
  if (image.samples.size() != n) throw DomainError("PGM sample count does not match its size");
  std::vector<unsigned char> buf;
  if (image.maxval > 255) {
    buf.resize(n * 2);
    for (size_t i = 0; i < n; ++i) {
      buf[2 * i] = static_cast<unsigned char>(image.samples[i] >> 8);
      buf[2 * i + 1] = static_cast<unsigned char>(image.samples[i] & 0xFF);
    }
  } else {
    buf.resize(n);
    for (size_t i = 0; i < n; ++i) buf[i] = static_cast<unsigned char>(image.samples[i]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

TriangleMesh read_ply(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw IoError(path.string(), "not a PLY file");
  }
  size_t n_vertices = 0;
  size_t n_faces = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  bool ascii = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (kw == "element") {
      size_t count = 0;
      ls >> current >> count;
      if (current == "vertex") n_vertices = count;
      if (current == "face") n_faces = count;
    } else if (kw == "property" && current == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vertex_props.push_back(name);
    } else if (kw == "end_header") {
      break;
    }
  }
  if (!ascii) throw IoError(path.string(), "only ASCII PLY is supported");
  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
  for (int i = 0; i < static_cast<int>(vertex_props.size()); ++i) {
    const auto& p = vertex_props[i];
    if (p == "x") ix = i;
    if (p == "y") iy = i;
    if (p == "z") iz = i;
    if (p == "nx") inx = i;
    if (p == "ny") iny = i;
    if (p == "nz") inz = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw IoError(path.string(), "PLY vertices lack x/y/z");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  TriangleMesh mesh;
  mesh.vertices.resize(n_vertices);
  if (has_normals) mesh.normals.resize(n_vertices);
  std::vector<double> vals(vertex_props.size());
  for (size_t v = 0; v < n_vertices; ++v) {
    for (auto& x : vals) {
      if (!(in >> x)) throw IoError(path.string(), "truncated PLY vertex list");
    }
    mesh.vertices[v] = Point3(vals[ix], vals[iy], vals[iz]);
    if (has_normals) mesh.normals[v] = Eigen::Vector3d(vals[inx], vals[iny], vals[inz]);
  }
  mesh.faces.reserve(n_faces);
  for (size_t f = 0; f < n_faces; ++f) {
    int count = 0;
    if (!(in >> count)) throw IoError(path.string(), "truncated PLY face list");
    if (count != 3) throw IoError(path.string(), "PLY faces must be triangles");
    std::array<std::uint32_t, 3> face{};
    for (auto& idx : face) {
      long long raw;
      if (!(in >> raw)) throw IoError(path.string(), "truncated PLY face list");
      if (raw < 0 || static_cast<size_t>(raw) >= n_vertices) {
        throw IoError(path.string(), "PLY face index out of range");
      }
      idx = static_cast<std::uint32_t>(raw);
    }
    mesh.faces.push_back(face);
  }
  if (!has_normals) {
    mesh.compute_normals();
  } else {
    for (auto& n : mesh.normals) {
      const double len = n.norm();
      if (len > 0.0) n /= len;
    }
  }
  return mesh;
}

void write_ply(const fs::path& path, const TriangleMesh& mesh) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertices.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "element face " << mesh.faces.size() << '\n'
      << "property list uchar int vertex_indices\nend_header\n";
  out.precision(9);
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& p = mesh.vertices[i];
    const Eigen::Vector3d n = i < mesh.normals.size() ? mesh.normals[i] : Eigen::Vector3d::UnitZ();
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << n.x() << ' ' << n.y() << ' ' << n.z()
        << '\n';
  }
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

EmbeddingFile read_emb1(const fs::path& path) {
  auto in = open_in(path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0) {
    throw IoError(path.string(), "bad EMB1 magic");
  }
  EmbeddingFile file;
  file.dim = read_le<std::uint32_t>(in, path);
  const auto count = read_le<std::uint32_t>(in, path);
  file.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.frame = read_le<std::uint32_t>(in, path);
    rec.segment = read_le<std::uint32_t>(in, path);
    rec.values.resize(file.dim);
    if (!in.read(reinterpret_cast<char*>(rec.values.data()),
                 static_cast<std::streamsize>(file.dim * sizeof(float)))) {
      throw IoError(path.string(), "truncated EMB1 record");
    }
    for (float x : rec.values) {
      if (!std::isfinite(x)) throw IoError(path.string(), "non-finite embedding value");
    }
    file.records.push_back(std::move(rec));
  }
  return file;
}

void write_emb1(const fs::path& path, const EmbeddingFile& file) {
  auto out = open_out(path);
  out.write("EMB1", 4);
  write_le<std::uint32_t>(out, file.dim);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.records.size()));
  for (const auto& rec : file.records) {
    if (rec.values.size() != file.dim) throw DomainError("EMB1 record has the wrong dimension");
    write_le(out, rec.frame);
    write_le(out, rec.segment);
    out.write(reinterpret_cast<const char*>(rec.values.data()),
              static_cast<std::streamsize>(rec.values.size() * sizeof(float)));
  }
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    auto out = open_out(tmp);
    out << contents;
    if (!out) throw IoError(tmp.string(), "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "cannot move into place: " + ec.message());
}

}  // namespace pbox::io
