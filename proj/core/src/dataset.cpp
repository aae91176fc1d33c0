#include "pixtok/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pixtok/error.hpp"

namespace pixtok {

namespace {

constexpr int kCifarSide = 32;
constexpr int kCifarClasses = 100;
constexpr int kPlane = kCifarSide * kCifarSide;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void Dataset::push_back(const std::uint8_t* hwc, int label) {
  if (label < 0 || (num_classes > 0 && label >= num_classes)) {
    throw ConfigError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(num_classes) + ")");
  }
  pixels.insert(pixels.end(), hwc, hwc + image_bytes());
  labels.push_back(label);
}

Normalization Dataset::statistics() const {
  std::array<double, 3> sum{}, sq{};
  const std::size_t n = pixels.size() / 3;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = pixels[i];
    sum[i % 3] += v;
    sq[i % 3] += v * v;
  }
  Normalization out;
  for (int c = 0; c < 3; ++c) {
    if (n == 0) break;
    const double mean = sum[c] / static_cast<double>(n);
    const double var = std::max(0.0, sq[c] / static_cast<double>(n) - mean * mean);
    out.mean[c] = static_cast<float>(mean);
    out.stddev[c] = static_cast<float>(std::max(std::sqrt(var), 1.0));
  }
  return out;
}

Dataset load_cifar100(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                          " is not a multiple of the 3074-byte record",
                      static_cast<long long>(bytes.size() - bytes.size() % kCifarRecordBytes));
  }
  Dataset data;
  data.height = data.width = kCifarSide;
  data.num_classes = kCifarClasses;
  const std::size_t count = bytes.size() / kCifarRecordBytes;
  data.pixels.resize(count * data.image_bytes());
  data.labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[1] >= kCifarClasses) {
      throw FormatError(path.string() + ": fine label " + std::to_string(rec[1]) +
                            " out of range",
                        static_cast<long long>(r * kCifarRecordBytes + 1));
    }
    data.labels[r] = rec[1];
    std::uint8_t* dst = data.pixels.data() + r * data.image_bytes();
    for (int p = 0; p < kPlane; ++p) {
      for (int c = 0; c < 3; ++c) dst[p * 3 + c] = rec[2 + c * kPlane + p];
    }
  }
  return data;
}

void save_cifar100(const std::filesystem::path& path, const Dataset& data,
                   const std::vector<int>& coarse) {
  if (data.height != kCifarSide || data.width != kCifarSide) {
    throw ShapeError("CIFAR records hold 32x32 images");
  }
  if (!coarse.empty() && coarse.size() != data.size()) {
    throw ShapeError("coarse label count does not match the dataset");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  std::vector<std::uint8_t> rec(kCifarRecordBytes);
  for (std::size_t r = 0; r < data.size(); ++r) {
    rec[0] = static_cast<std::uint8_t>(coarse.empty() ? 0 : coarse[r]);
    rec[1] = static_cast<std::uint8_t>(data.labels[r]);
    const std::uint8_t* src = data.image_data(r);
    for (int p = 0; p < kPlane; ++p) {
      for (int c = 0; c < 3; ++c) rec[2 + c * kPlane + p] = src[p * 3 + c];
    }
    out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
}

Dataset load_raw_folder(const std::filesystem::path& dir, int height, int width,
                        int num_classes) {
  const auto index_path = dir / "index.tsv";
  std::ifstream index(index_path);
  if (!index) throw FormatError("cannot open " + index_path.string());
  Dataset data;
  data.height = height;
  data.width = width;
  data.num_classes = num_classes;
  std::string line;
  long long line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(index_path.string() + ": expected '<path>\\t<label>'", line_no);
    }
    int label = -1;
    try {
      std::size_t used = 0;
      label = std::stoi(line.substr(tab + 1), &used);
      if (tab + 1 + used != line.size()) label = -1;
    } catch (const std::exception&) {
      label = -1;
    }
    if (label < 0 || label >= num_classes) {
      throw FormatError(index_path.string() + ": bad label", line_no);
    }
    const auto bytes = read_all(dir / line.substr(0, tab));
    if (bytes.size() != data.image_bytes()) {
      throw FormatError(line.substr(0, tab) + ": expected " + std::to_string(data.image_bytes()) +
                            " bytes, found " + std::to_string(bytes.size()),
                        line_no);
    }
    data.push_back(bytes.data(), label);
  }
  return data;
}

void save_raw_folder(const std::filesystem::path& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.tsv");
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::ostringstream name;
    name << "img_" << i << ".rgb";
    std::ofstream out(dir / name.str(), std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.image_data(i)),
              static_cast<std::streamsize>(data.image_bytes()));
    index << name.str() << '\t' << data.labels[i] << '\n';
  }
  if (!index) throw FormatError("cannot write " + (dir / "index.tsv").string());
}

}  // namespace pixtok
