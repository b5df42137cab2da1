#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pseudobox/mesh.hpp"

namespace pbox::io {

namespace fs = std::filesystem;

// Binary PGM ("P5") raster. Samples are 16-bit big-endian when maxval > 255.
struct PgmImage {
  int width = 0;
  int height = 0;
  std::uint32_t maxval = 65535;
  std::vector<std::uint16_t> samples;
};

PgmImage read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const PgmImage& image);

// ASCII PLY with vertex (x, y, z[, nx, ny, nz]) and triangular faces.
// Missing normals are recomputed from the faces.
TriangleMesh read_ply(const fs::path& path);
void write_ply(const fs::path& path, const TriangleMesh& mesh);

// EMB1: "EMB1", u32 dim, u32 count, then count x (u32 frame, u32 segment, dim x f32), little endian.
inline constexpr std::uint32_t kPromptFrame = 0xFFFFFFFFu;

struct EmbeddingRecord {
  std::uint32_t frame = 0;
  std::uint32_t segment = 0;
  std::vector<float> values;
};

struct EmbeddingFile {
  std::uint32_t dim = 0;
  std::vector<EmbeddingRecord> records;
};

EmbeddingFile read_emb1(const fs::path& path);
void write_emb1(const fs::path& path, const EmbeddingFile& file);

std::string read_text(const fs::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const fs::path& path, const std::string& contents);

}  // namespace pbox::io
