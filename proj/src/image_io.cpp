#include "sdd/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>

#include "sdd/errors.hpp"

namespace sdd {

namespace {

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

Image from_interleaved(const std::vector<uint8_t>& buf, int h, int w, int channels) {
  Image img(channels, h, w);
  constexpr float kInv = 1.0f / 255.0f;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) = buf[(static_cast<size_t>(y) * w + x) * channels + c] * kInv;
  return img;
}

Image load_png_file(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str()))
    throw IoError("failed to read PNG " + path.string() + ": " + png.message);
  bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw IoError("failed to decode PNG " + path.string() + ": " + msg);
  }
  return from_interleaved(buf, static_cast<int>(png.height), static_cast<int>(png.width), color ? 3 : 1);
}

Image load_jpeg_file(const std::filesystem::path& path) {
  FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open " + path.string());
  jpeg_decompress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(f);
    throw IoError("failed to parse JPEG " + path.string());
  }
  cinfo.out_color_space = cinfo.num_components >= 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_start_decompress(&cinfo);
  int w = static_cast<int>(cinfo.output_width);
  int h = static_cast<int>(cinfo.output_height);
  int ch = cinfo.output_components;
  std::vector<uint8_t> buf(static_cast<size_t>(w) * h * ch);
  while (cinfo.output_scanline < cinfo.output_height) {
    uint8_t* row = buf.data() + static_cast<size_t>(cinfo.output_scanline) * w * ch;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(f);
  return from_interleaved(buf, h, w, ch);
}

void skip_pnm_space(std::istream& is) {
  while (true) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
}

Image load_pnm_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string magic(2, '\0');
  is.read(magic.data(), 2);
  bool binary = magic == "P5" || magic == "P6";
  bool ascii = magic == "P2" || magic == "P3";
  if (!binary && !ascii) throw IoError("unsupported PNM magic '" + magic + "' in " + path.string());
  int ch = (magic == "P6" || magic == "P3") ? 3 : 1;
  skip_pnm_space(is);
  int w, h, maxval;
  is >> w;
  skip_pnm_space(is);
  is >> h;
  skip_pnm_space(is);
  is >> maxval;
  if (!is || w < 1 || h < 1 || maxval < 1 || maxval > 65535)
    throw IoError("malformed PNM header in " + path.string());
  Image img(ch, h, w);
  float inv = 1.0f / maxval;
  if (binary) {
    is.get();  // single whitespace after maxval
    int bytes = maxval > 255 ? 2 : 1;
    std::vector<uint8_t> buf(static_cast<size_t>(w) * h * ch * bytes);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw IoError("truncated PNM data in " + path.string());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c) {
          size_t i = (static_cast<size_t>(y) * w + x) * ch + c;
          int v = bytes == 1 ? buf[i] : (buf[2 * i] << 8 | buf[2 * i + 1]);
          img.at(c, y, x) = v * inv;
        }
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c) {
          int v;
          is >> v;
          if (!is) throw IoError("truncated PNM data in " + path.string());
          img.at(c, y, x) = v * inv;
        }
  }
  return img;
}

uint32_t le32(const uint8_t* p) { return p[0] | p[1] << 8 | p[2] << 16 | static_cast<uint32_t>(p[3]) << 24; }
uint16_t le16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | p[1] << 8); }

Image load_bmp_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (raw.size() < 54 || raw[0] != 'B' || raw[1] != 'M') throw IoError("not a BMP file: " + path.string());
  uint32_t data_off = le32(&raw[10]);
  uint32_t hdr = le32(&raw[14]);
  int w = static_cast<int32_t>(le32(&raw[18]));
  int h_raw = static_cast<int32_t>(le32(&raw[22]));
  bool top_down = h_raw < 0;
  int h = top_down ? -h_raw : h_raw;
  uint16_t bpp = le16(&raw[28]);
  uint32_t compression = le32(&raw[30]);
  if (compression != 0 || (bpp != 8 && bpp != 24 && bpp != 32))
    throw IoError("unsupported BMP variant in " + path.string());
  const uint8_t* palette = raw.data() + 14 + hdr;
  size_t stride = (static_cast<size_t>(w) * bpp / 8 + 3) & ~size_t{3};
  if (raw.size() < data_off + stride * h) throw IoError("truncated BMP data in " + path.string());
  int ch = bpp == 8 ? 1 : 3;
  Image img(ch, h, w);
  constexpr float kInv = 1.0f / 255.0f;
  for (int y = 0; y < h; ++y) {
    int sy = top_down ? y : h - 1 - y;
    const uint8_t* row = raw.data() + data_off + stride * sy;
    for (int x = 0; x < w; ++x) {
      if (bpp == 8) {
        img.at(0, y, x) = palette[static_cast<size_t>(row[x]) * 4] * kInv;  // grayscale palettes: B==G==R
      } else {
        const uint8_t* px = row + static_cast<size_t>(x) * bpp / 8;
        img.at(0, y, x) = px[2] * kInv;
        img.at(1, y, x) = px[1] * kInv;
        img.at(2, y, x) = px[0] * kInv;
      }
    }
  }
  return img;
}

std::vector<uint8_t> to_interleaved(const Image& img) {
  std::vector<uint8_t> buf(static_cast<size_t>(img.h) * img.w * img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.c; ++c) {
        float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
        buf[(static_cast<size_t>(y) * img.w + x) * img.c + c] = static_cast<uint8_t>(std::lround(v * 255.0f));
      }
  return buf;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("image file does not exist: " + path.string());
  std::string ext = lower_ext(path);
  if (ext == ".png") return load_png_file(path);
  if (ext == ".jpg" || ext == ".jpeg") return load_jpeg_file(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm_file(path);
  if (ext == ".bmp") return load_bmp_file(path);
  throw IoError("unsupported image format '" + ext + "': " + path.string());
}

Mask load_mask(const std::filesystem::path& path) {
  Image img = load_image(path);
  if (img.c != 1) img = to_grayscale(img);
  Mask m(img.h, img.w);
  for (size_t i = 0; i < m.size(); ++i) m.data[i] = img.data[i] > 0.0f ? 1 : 0;
  return m;
}

void save_png(const std::filesystem::path& path, const Image& img) {
  if (img.c != 1 && img.c != 3) throw ArgumentError("save_png: image must have 1 or 3 channels");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.w);
  png.height = static_cast<png_uint_32>(img.h);
  png.format = img.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  auto buf = to_interleaved(img);
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("failed to write PNG " + path.string() + ": " + png.message);
}

void save_png(const std::filesystem::path& path, const Mask& mask) {
  Image img(1, mask.h, mask.w);
  for (size_t i = 0; i < mask.size(); ++i) img.data[i] = mask.data[i] ? 1.0f : 0.0f;
  save_png(path, img);
}

void save_pgm(const std::filesystem::path& path, const Image& img) {
  Image gray = img.c == 1 ? img : to_grayscale(img);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P5\n" << gray.w << " " << gray.h << "\n255\n";
  auto buf = to_interleaved(gray);
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("short write to " + path.string());
}

}  // namespace sdd
