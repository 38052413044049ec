#include "octskin/data_io.hpp"

#include <png.h>

#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <random>
#include <sstream>

#include "octskin/config.hpp"

namespace octskin {

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path sidecar_path(const fs::path& image_path) {
  return fs::path(image_path.string() + ".meta");
}

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

// libpng reports failures with longjmp; no object with a destructor may be
// created between setjmp and the last libpng call in this frame.
struct PngReadState {
  const std::vector<unsigned char>* bytes = nullptr;
  std::size_t offset = 0;
  char message[256] = {};
};

void png_read_from_buffer(png_structp png, png_bytep out, png_size_t count) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + count > st->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, st->bytes->data() + st->offset, count);
  st->offset += count;
}

void png_on_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  std::longjmp(png_jmpbuf(png), 1);
}

void png_on_warning(png_structp, png_const_charp) {}

enum class PngDecode { kOk, kError, kNotIndexable };

PngDecode decode_png_indices(PngReadState& st, std::vector<unsigned char>& pixels,
                             png_uint_32& width, png_uint_32& height) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_on_error, png_on_warning);
  if (!png) return PngDecode::kError;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return PngDecode::kError;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return PngDecode::kError;
  }
  png_set_read_fn(png, &st, png_read_from_buffer);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (!((color == PNG_COLOR_TYPE_PALETTE && depth <= 8) ||
        (color == PNG_COLOR_TYPE_GRAY && depth == 8))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return PngDecode::kNotIndexable;
  }
  if (depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  pixels.resize(static_cast<std::size_t>(width) * height);
  for (png_uint_32 r = 0; r < height; ++r) png_read_row(png, pixels.data() + r * width, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return PngDecode::kOk;
}

}  // namespace

void write_file_atomic(const fs::path& path, std::span<const unsigned char> bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(rd()) + "-" +
                       std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::optional<Spacing> read_spacing_sidecar(const fs::path& image_path) {
  const fs::path meta = sidecar_path(image_path);
  if (!fs::exists(meta)) return std::nullopt;
  Spacing s = kDefaultSpacing;
  for (const auto& kv : parse_key_values(read_text_file(meta), meta.string())) {
    if (kv.key == "axial_um_per_px")
      s.axial_um_per_px = parse_double(kv.value, kv.key);
    else if (kv.key == "lateral_um_per_px")
      s.lateral_um_per_px = parse_double(kv.value, kv.key);
    else
      throw FormatError(meta.string() + ": unknown key `" + kv.key + "`");
  }
  if (!(s.axial_um_per_px > 0) || !(s.lateral_um_per_px > 0))
    throw FormatError(meta.string() + ": spacing must be positive");
  return s;
}

void write_spacing_sidecar(const fs::path& image_path, const Spacing& spacing) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "axial_um_per_px = " << spacing.axial_um_per_px << "\n"
     << "lateral_um_per_px = " << spacing.lateral_um_per_px << "\n";
  write_text_atomic(sidecar_path(image_path), ss.str());
}

OctImage load_image(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("image not found: " + path.string());
  const auto bytes = read_bytes(path);
  const cv::Mat raw = cv::imdecode(cv::Mat(bytes, false), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IoError("cannot decode image " + path.string());
  if (raw.channels() != 1)
    throw FormatError(path.string() + ": expected a single-channel raster, found " +
                      std::to_string(raw.channels()) + " channels");
  double scale = 0.0;
  if (raw.depth() == CV_8U)
    scale = 1.0 / 255.0;
  else if (raw.depth() == CV_16U)
    scale = 1.0 / 65535.0;
  else
    throw FormatError(path.string() + ": only 8- and 16-bit rasters are supported");
  if (raw.rows < kMinImageSide || raw.cols < kMinImageSide)
    throw FormatError(path.string() + ": image must be at least 32x32, got " +
                      std::to_string(raw.rows) + "x" + std::to_string(raw.cols));

  cv::Mat f;
  raw.convertTo(f, CV_64F, scale);
  OctImage img;
  img.pixels = Raster<float>(raw.rows, raw.cols);
  for (int r = 0; r < raw.rows; ++r) {
    const double* src = f.ptr<double>(r);
    for (int c = 0; c < raw.cols; ++c) img.pixels(r, c) = static_cast<float>(src[c]);
  }
  img.spacing = read_spacing_sidecar(path).value_or(kDefaultSpacing);
  img.subject_id = path.stem().string();
  return img;
}

void save_image(const OctImage& img, const fs::path& path) {
  cv::Mat out(img.height(), img.width(), CV_16UC1);
  for (int r = 0; r < img.height(); ++r) {
    auto* dst = out.ptr<std::uint16_t>(r);
    for (int c = 0; c < img.width(); ++c) {
      const double v = std::clamp(static_cast<double>(img.pixels(r, c)), 0.0, 1.0);
      dst[c] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
  }
  const std::string ext = lower_ext(path);
  if (ext != ".png" && ext != ".tif" && ext != ".tiff")
    throw FormatError("unsupported image extension for " + path.string());
  std::vector<unsigned char> buf;
  if (!cv::imencode(ext, out, buf)) throw IoError("cannot encode " + path.string());
  write_file_atomic(path, buf);
  write_spacing_sidecar(path, img.spacing);
}

void validate_mask(const LabelMask& mask) {
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      if (mask(r, c) >= kNumClasses)
        throw SchemaError("mask value " + std::to_string(mask(r, c)) + " at (row " +
                          std::to_string(r) + ", col " + std::to_string(c) +
                          ") is not a class id in {0,1,2,3}");
}

LabelMask load_mask(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("mask not found: " + path.string());
  const auto bytes = read_bytes(path);
  PngReadState st;
  st.bytes = &bytes;
  std::vector<unsigned char> pixels;
  png_uint_32 width = 0, height = 0;
  switch (decode_png_indices(st, pixels, width, height)) {
    case PngDecode::kOk: break;
    case PngDecode::kNotIndexable:
      throw FormatError(path.string() + ": mask must be an 8-bit indexed or grayscale PNG");
    case PngDecode::kError:
      throw IoError(path.string() + ": " + (st.message[0] ? st.message : "not a PNG file"));
  }
  LabelMask mask(Raster<std::uint8_t>(static_cast<int>(height), static_cast<int>(width),
                                      std::move(pixels)));
  try {
    validate_mask(mask);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return mask;
}

void save_mask(const LabelMask& mask, const fs::path& path) {
  validate_mask(mask);
  // Background black, epidermis cyan, dermis yellow, subcutaneous red.
  const png_byte palette[kNumClasses * 3] = {0, 0, 0, 0, 255, 255, 255, 255, 0, 255, 0, 0};
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width());
  image.height = static_cast<png_uint_32>(mask.height());
  image.format = PNG_FORMAT_RGB_COLORMAP;
  image.colormap_entries = kNumClasses;

  png_alloc_size_t size = 0;
  const auto* buffer = mask.labels.data().data();
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer, 0, palette))
    throw IoError("cannot encode mask " + path.string() + ": " + image.message);
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer, 0, palette))
    throw IoError("cannot encode mask " + path.string() + ": " + image.message);
  out.resize(size);
  png_image_free(&image);
  write_file_atomic(path, out);
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto cols = split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cols.size() != 4)
      throw ValidationError(where + ": expected 4 tab-separated fields, found " +
                            std::to_string(cols.size()));
    ManifestEntry e;
    e.image_path = fs::path(cols[0]).is_absolute() ? fs::path(cols[0]) : base / cols[0];
    e.mask_path = fs::path(cols[1]).is_absolute() ? fs::path(cols[1]) : base / cols[1];
    e.subject_id = cols[2];
    const long long day = parse_int(cols[3], "day");
    if (day < 0) throw ValidationError(where + ": day must be non-negative");
    e.day = static_cast<int>(day);

    for (const auto* p : {&e.image_path, &e.mask_path})
      if (!fs::is_regular_file(*p)) throw ValidationError(where + ": missing file " + p->string());
    const OctImage img = load_image(e.image_path);
    const LabelMask mask = load_mask(e.mask_path);
    if (img.height() != mask.height() || img.width() != mask.width())
      throw ValidationError(where + ": shape mismatch between " + e.image_path.string() + " (" +
                            std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                            ") and " + e.mask_path.string() + " (" +
                            std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                            ")");
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  std::ostringstream ss;
  for (const auto& e : manifest.entries) {
    auto rel = [&](const fs::path& p) {
      const fs::path r = base.empty() ? p : p.lexically_relative(base);
      return (r.empty() ? p : r).generic_string();
    };
    ss << rel(e.image_path) << '\t' << rel(e.mask_path) << '\t' << e.subject_id << '\t' << e.day
       << '\n';
  }
  write_text_atomic(path, ss.str());
}

void save_probability_npy(const ProbabilityMap& pm, const fs::path& path) {
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (4, " +
                       std::to_string(pm.height()) + ", " + std::to_string(pm.width()) + "), }";
  const std::size_t preamble = 10;
  std::size_t total = preamble + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');

  std::vector<unsigned char> out;
  const unsigned char magic[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.insert(out.end(), magic, magic + 8);
  out.push_back(static_cast<unsigned char>(header.size() & 0xff));
  out.push_back(static_cast<unsigned char>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());
  for (double v : pm.data()) {
    const float f = static_cast<float>(v);
    unsigned char b[4];
    std::memcpy(b, &f, 4);
    out.insert(out.end(), b, b + 4);
  }
  write_file_atomic(path, out);
}

ProbabilityMap load_probability_npy(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 10 || bytes[0] != 0x93 || std::memcmp(bytes.data() + 1, "NUMPY", 5) != 0)
    throw FormatError(path.string() + ": not a .npy file");
  const std::size_t hlen = bytes[8] | (bytes[9] << 8);
  if (10 + hlen > bytes.size()) throw FormatError(path.string() + ": truncated header");
  const std::string header(bytes.begin() + 10, bytes.begin() + 10 + static_cast<long>(hlen));
  if (header.find("'<f4'") == std::string::npos || header.find("False") == std::string::npos)
    throw FormatError(path.string() + ": expected little-endian float32 C-order data");
  const auto open = header.find('(');
  const auto close = header.find(')');
  const auto dims = split(header.substr(open + 1, close - open - 1), ',');
  if (dims.size() < 3 || parse_int(dims[0], "channels") != kNumClasses)
    throw FormatError(path.string() + ": expected shape (4, H, W)");
  const int h = static_cast<int>(parse_int(dims[1], "height"));
  const int w = static_cast<int>(parse_int(dims[2], "width"));
  ProbabilityMap pm(h, w);
  const std::size_t off = 10 + hlen;
  if (bytes.size() != off + pm.data().size() * 4) throw FormatError(path.string() + ": bad payload size");
  for (std::size_t i = 0; i < pm.data().size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + off + 4 * i, 4);
    pm.data()[i] = f;
  }
  return pm;
}

}  // namespace octskin

namespace octskin {

std::pair<OctImage, LabelMask> load_entry(const ManifestEntry& entry) {
  OctImage img = load_image(entry.image_path);
  img.subject_id = entry.subject_id;
  img.day = entry.day;
  LabelMask mask = load_mask(entry.mask_path);
  if (img.height() != mask.height() || img.width() != mask.width())
    throw ValidationError("shape mismatch between " + entry.image_path.string() + " and " + entry.mask_path.string());
  return {std::move(img), std::move(mask)};
}

}  // namespace octskin
