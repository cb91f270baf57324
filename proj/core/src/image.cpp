#include "gazequiz/image.hpp"

#include <fstream>
#include <string>

#include "gazequiz/error.hpp"

namespace gazequiz {

std::string encode_pgm(const GrayImage& image) {
  std::string bytes = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return bytes;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StorageError, "cannot write image " + path.string());
  const std::string bytes = encode_pgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::StorageError, "short write on image " + path.string());
}

namespace {

int read_header_int(std::istream& in) {
  // PGM headers allow '#' comments between fields.
  while (true) {
    in >> std::ws;
    if (in.peek() != '#') break;
    std::string comment;
    std::getline(in, comment);
  }
  int value = -1;
  in >> value;
  return value;
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open image " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error(ErrorCode::ParseError, path.string() + " is not a binary PGM");
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::ParseError, path.string() + ": unsupported PGM header");
  in.get();
  GrayImage image(w, h);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
    throw Error(ErrorCode::ParseError, path.string() + ": truncated pixel data");
  }
  return image;
}

}  // namespace gazequiz
