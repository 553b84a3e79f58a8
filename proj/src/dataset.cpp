#include "fdsnn/dataset.hpp"

#include "fdsnn/errors.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fdsnn {

namespace fs = std::filesystem;

Dataset Dataset::head(std::size_t count) const {
  Dataset d;
  d.shape = shape;
  const std::size_t k = std::min(count, size());
  d.images.assign(images.begin(), images.begin() + k);
  d.labels.assign(labels.begin(), labels.begin() + k);
  return d;
}

namespace {

// gzopen reads plain files transparently.
std::vector<unsigned char> read_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw FormatError("cannot open " + path);
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
  const bool bad = got < 0;
  gzclose(f);
  if (bad) throw FormatError("corrupt gzip stream in " + path);
  return out;
}

std::uint32_t be32(const std::vector<unsigned char>& d, std::size_t off) {
  if (off + 4 > d.size()) throw FormatError("truncated IDX header");
  return (std::uint32_t(d[off]) << 24) | (std::uint32_t(d[off + 1]) << 16) | (std::uint32_t(d[off + 2]) << 8) |
         d[off + 3];
}

std::string find_file(const std::string& dir, const std::vector<std::string>& names) {
  for (const auto& n : names)
    for (const char* ext : {".gz", ""}) {
      const fs::path p = fs::path(dir) / (n + ext);
      if (fs::exists(p)) return p.string();
    }
  return {};
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit) {
  const auto img = read_maybe_gz(images_path);
  const auto lab = read_maybe_gz(labels_path);
  if (be32(img, 0) != 0x803) throw FormatError(images_path + ": not an IDX3 ubyte image file");
  if (be32(lab, 0) != 0x801) throw FormatError(labels_path + ": not an IDX1 ubyte label file");
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  if (be32(lab, 4) != n) throw FormatError("image and label counts differ");
  if (img.size() < 16 + n * rows * cols || lab.size() < 8 + n) throw FormatError("truncated IDX payload");
  const std::size_t count = limit ? std::min(limit, n) : n;
  Dataset d;
  d.shape = {1, int(rows), int(cols)};
  d.images.resize(count);
  d.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    d.images[i].resize(rows * cols);
    for (std::size_t k = 0; k < rows * cols; ++k) d.images[i][k] = img[16 + i * rows * cols + k] / 255.0;
    d.labels[i] = lab[8 + i];
  }
  return d;
}

Dataset load_mnist_dir(const std::string& dir, const std::string& split, std::size_t limit) {
  const std::string prefix = split == "train" ? "train" : "t10k";
  if (split != "train" && split != "test") throw ParameterError("split must be 'train' or 'test'");
  const std::string images = find_file(dir, {prefix + "-images-idx3-ubyte", prefix + "-images.idx3-ubyte"});
  const std::string labels = find_file(dir, {prefix + "-labels-idx1-ubyte", prefix + "-labels.idx1-ubyte"});
  if (images.empty() || labels.empty()) throw FormatError("no " + split + " IDX files in " + dir);
  return load_idx(images, labels, limit);
}

std::vector<double> load_pgm(const std::string& path, Shape* shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw FormatError(path + ": not a PGM file");
  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
    long v;
    if (!(in >> v)) throw FormatError(path + ": bad PGM header");
    return v;
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw FormatError(path + ": bad PGM dimensions");
  std::vector<double> px(std::size_t(w) * h);
  if (magic == "P5") {
    in.get();
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(px.size() * bytes);
    if (!in.read(reinterpret_cast<char*>(raw.data()), raw.size())) throw FormatError(path + ": truncated PGM");
    for (std::size_t i = 0; i < px.size(); ++i) {
      const unsigned v = bytes == 2 ? (unsigned(raw[2 * i]) << 8 | raw[2 * i + 1]) : raw[i];
      px[i] = double(v) / maxval;
    }
  } else {
    for (double& x : px) x = double(next_int()) / maxval;
  }
  if (shape) *shape = {1, int(h), int(w)};
  return px;
}

void save_pgm(const std::string& path, const std::vector<double>& pixels, const Shape& shape) {
  if (pixels.size() != std::size_t(shape.h) * shape.w) throw ParameterError("PGM size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "P5\n" << shape.w << " " << shape.h << "\n255\n";
  for (double x : pixels) out.put(static_cast<char>(std::lround(std::clamp(x, 0.0, 1.0) * 255)));
}

Dataset load_pgm_dir(const std::string& dir, std::size_t limit) {
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& sub : fs::directory_iterator(dir)) {
    if (!sub.is_directory()) continue;
    const std::string name = sub.path().filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
    for (const auto& f : fs::directory_iterator(sub.path()))
      if (f.path().extension() == ".pgm") files.emplace_back(std::stoi(name), f.path());
  }
  if (files.empty()) throw FormatError("no label/*.pgm files in " + dir);
  std::sort(files.begin(), files.end(), [](const auto& x, const auto& y) { return x.second < y.second; });
  if (limit && files.size() > limit) files.resize(limit);
  Dataset d;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Shape s;
    d.images.push_back(load_pgm(files[i].second.string(), &s));
    if (i == 0) d.shape = s;
    else if (!(s == d.shape)) throw FormatError("PGM images differ in size");
    d.labels.push_back(files[i].first);
  }
  return d;
}

Dataset load_dataset(const std::string& dir, const std::string& split, std::size_t limit) {
  if (!fs::is_directory(dir)) throw FormatError("dataset directory not found: " + dir);
  const std::string prefix = split == "train" ? "train" : "t10k";
  if (!find_file(dir, {prefix + "-images-idx3-ubyte", prefix + "-images.idx3-ubyte"}).empty())
    return load_mnist_dir(dir, split, limit);
  const fs::path sub = fs::path(dir) / split;
  if (fs::is_directory(sub)) return load_pgm_dir(sub.string(), limit);
  return load_pgm_dir(dir, limit);
}

}  // namespace fdsnn
