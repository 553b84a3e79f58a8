#pragma once

#include "fdsnn/network.hpp"

#include <string>
#include <vector>

namespace fdsnn {

// Grayscale images scaled to [0,1] with integer labels.
struct Dataset {
  Shape shape{1, 28, 28};
  std::vector<std::vector<double>> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
  Dataset head(std::size_t count) const;
};

// IDX image/label pair (optionally gzip-compressed).
Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit = 0);
// Directory holding MNIST-named IDX files; split is "train" or "test".
Dataset load_mnist_dir(const std::string& dir, const std::string& split, std::size_t limit = 0);
// Directory of PGM files grouped by label subdirectory (dir/3/x.pgm).
Dataset load_pgm_dir(const std::string& dir, std::size_t limit = 0);
// Either layout, detected from the directory contents.
Dataset load_dataset(const std::string& dir, const std::string& split = "test", std::size_t limit = 0);

// Binary (P5) or ASCII (P2) PGM; pixels divided by maxval.
std::vector<double> load_pgm(const std::string& path, Shape* shape = nullptr);
void save_pgm(const std::string& path, const std::vector<double>& pixels, const Shape& shape);

}  // namespace fdsnn
