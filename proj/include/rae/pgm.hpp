#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rae/errors.hpp"
#include "rae/image.hpp"

namespace rae {

namespace detail {

// Reads the next header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) continue;
    tok.push_back(static_cast<char>(ch));
    while ((ch = in.get()) != EOF && !std::isspace(ch) && ch != '#') tok.push_back(static_cast<char>(ch));
    if (ch == '#') in.unget();
    break;
  }
  return tok;
}

}  // namespace detail

// Binary 8-bit PGM (P5, maxval 255). Byte value 255 decodes to exactly 1.0.
inline Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PGM file: " + path);
  if (detail::pnm_token(in) != "P5") throw IoError("not a binary PGM (P5) file: " + path);
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(detail::pnm_token(in));
    h = std::stoi(detail::pnm_token(in));
    maxval = std::stoi(detail::pnm_token(in));
  } catch (const std::exception&) {
    throw IoError("malformed PGM header: " + path);
  }
  if (w <= 0 || h <= 0) throw IoError("invalid PGM dimensions in " + path);
  if (maxval != 255) throw IoError("unsupported PGM maxval " + std::to_string(maxval) + " in " + path + " (only 255 supported)");
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw IoError("truncated PGM pixel data in " + path);
  Image img(w, h);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

inline void write_pgm(const Image& img, const std::string& path) {
  img.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open PGM file for writing: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> raw(img.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<std::uint8_t>(std::lround(img.pixels[i] * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing PGM data to " + path);
}

}  // namespace rae
