#include "pixtok/permutation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pixtok/error.hpp"
#include "pixtok/rng.hpp"

namespace pixtok {

int grid_distance(int width, int a, int b) {
  const int dr = std::abs(a / width - b / width);
  const int dc = std::abs(a % width - b % width);
  return std::max(dr, dc);
}

int max_swaps(int height, int width) { return height * width / 2; }

std::string delta_str(std::optional<int> delta) {
  return delta ? std::to_string(*delta) : std::string("inf");
}

std::optional<int> parse_delta(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "INF") return std::nullopt;
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || used == 0) {
    throw ConfigError("invalid distance threshold '" + text + "' (expected an integer or inf)");
  }
  if (value < 2) throw ConfigError("distance threshold must be >= 2, got " + text);
  return value;
}

PermutationMap PermutationMap::identity(int height, int width) {
  return from_swaps(height, width, std::nullopt, 0, {});
}

PermutationMap PermutationMap::from_swaps(int height, int width, std::optional<int> delta,
                                          std::uint64_t seed, std::vector<Swap> swaps) {
  if (height < 1 || width < 1) throw ConfigError("permutation grid must be non-empty");
  if (delta && *delta < 2) throw ConfigError("distance threshold must be >= 2");
  PermutationMap p;
  p.height_ = height;
  p.width_ = width;
  p.delta_ = delta;
  p.seed_ = seed;
  const int n = height * width;
  p.mapping_.resize(n);
  for (int i = 0; i < n; ++i) p.mapping_[i] = i;
  std::vector<std::uint8_t> used(n, 0);
  for (std::size_t s = 0; s < swaps.size(); ++s) {
    const auto [a, b] = swaps[s];
    const std::string where = "swap " + std::to_string(s) + " (" + std::to_string(a) + ", " +
                              std::to_string(b) + ")";
    if (a < 0 || b < 0 || a >= n || b >= n) throw FormatError(where + " out of range");
    if (a == b) throw FormatError(where + " is not a transposition");
    if (used[a] || used[b]) throw FormatError(where + " reuses a pixel; swaps must be disjoint");
    if (delta && grid_distance(width, a, b) >= *delta) {
      throw FormatError(where + " exceeds distance bound " + std::to_string(*delta));
    }
    used[a] = used[b] = 1;
    p.mapping_[a] = b;
    p.mapping_[b] = a;
  }
  p.swaps_ = std::move(swaps);
  return p;
}

PermutationMap PermutationMap::inverse() const {
  // Disjoint transpositions form an involution.
  return *this;
}

PermutationMap generate_permutation(int height, int width, int swaps, std::optional<int> delta,
                                    std::uint64_t seed) {
  if (height < 1 || width < 1) throw ConfigError("permutation grid must be non-empty");
  if (swaps < 0 || swaps > max_swaps(height, width)) {
    throw ConfigError("swap count " + std::to_string(swaps) + " outside [0, " +
                      std::to_string(max_swaps(height, width)) + "] for a " +
                      std::to_string(height) + "x" + std::to_string(width) + " grid");
  }
  if (delta && *delta < 2) throw ConfigError("distance threshold must be >= 2");

  const int n = height * width;
  Rng rng = make_rng(seed, {0x7065726dULL});
  // Unused pixels kept in a swap-remove array with position lookup.
  std::vector<std::int32_t> unused(n), where(n);
  for (int i = 0; i < n; ++i) unused[i] = where[i] = i;
  auto remove = [&](std::int32_t px) {
    const auto pos = where[px];
    const auto last = unused.back();
    unused[pos] = last;
    where[last] = pos;
    unused.pop_back();
    where[px] = -1;
  };

  std::vector<PermutationMap::Swap> result;
  result.reserve(swaps);
  const long long budget = 1000LL * swaps;
  long long attempts = 0;
  std::vector<std::int32_t> candidates;
  while (static_cast<int>(result.size()) < swaps) {
    if (attempts++ >= budget) {
      throw ConfigError("could not place " + std::to_string(swaps) + " swaps within distance " +
                        delta_str(delta) + " on a " + std::to_string(height) + "x" +
                        std::to_string(width) + " grid (placed " +
                        std::to_string(result.size()) + " before exhausting " +
                        std::to_string(budget) + " attempts)");
    }
    const auto a = unused[uniform_index(rng, unused.size())];
    std::int32_t b = -1;
    if (!delta) {
      if (unused.size() < 2) continue;
      auto pick = unused[uniform_index(rng, unused.size() - 1)];
      // Skip over `a` without rejection.
      if (pick == a) pick = unused.back();
      b = pick;
    } else {
      const int reach = *delta - 1;
      const int ar = a / width, ac = a % width;
      candidates.clear();
      for (int r = std::max(0, ar - reach); r <= std::min(height - 1, ar + reach); ++r)
        for (int c = std::max(0, ac - reach); c <= std::min(width - 1, ac + reach); ++c) {
          const int idx = r * width + c;
          if (idx != a && where[idx] >= 0) candidates.push_back(idx);
        }
      if (candidates.empty()) continue;
      b = candidates[uniform_index(rng, candidates.size())];
    }
    remove(a);
    remove(b);
    result.emplace_back(std::min(a, b), std::max(a, b));
  }
  return PermutationMap::from_swaps(height, width, delta, seed, std::move(result));
}

Image apply_permutation(const Image& img, const PermutationMap& perm) {
  if (img.height != perm.height() || img.width != perm.width()) {
    throw ShapeError("permutation is for a " + std::to_string(perm.height()) + "x" +
                     std::to_string(perm.width()) + " grid, image is " +
                     std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  Image out = img;
  const auto& map = perm.mapping();
  for (int i = 0; i < perm.size(); ++i) {
    std::copy_n(img.values.begin() + static_cast<std::size_t>(i) * Image::kChannels,
                Image::kChannels,
                out.values.begin() + static_cast<std::size_t>(map[i]) * Image::kChannels);
  }
  return out;
}

void write_permutation(std::ostream& os, const PermutationMap& perm) {
  os << "PERM v1 " << perm.height() << ' ' << perm.width() << ' ' << perm.swap_count() << ' '
     << delta_str(perm.delta()) << ' ' << perm.seed() << '\n';
  for (const auto& [a, b] : perm.swaps()) os << a << ' ' << b << '\n';
}

void save_permutation(const std::string& path, const PermutationMap& perm) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open permutation file for writing: " + path);
  write_permutation(os, perm);
  if (!os) throw Error("failed writing permutation file: " + path);
}

PermutationMap read_permutation(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty permutation file", 1);
  std::istringstream header(line);
  std::string magic, version, delta_text;
  int h = 0, w = 0, t = 0;
  std::uint64_t seed = 0;
  if (!(header >> magic >> version >> h >> w >> t >> delta_text >> seed) || magic != "PERM" ||
      version != "v1") {
    throw FormatError("bad permutation header '" + line + "'", 1);
  }
  std::optional<int> delta;
  try {
    delta = parse_delta(delta_text);
  } catch (const ConfigError& e) {
    throw FormatError(e.what(), 1);
  }
  if (h < 1 || w < 1 || t < 0 || t > max_swaps(h, w)) {
    throw FormatError("permutation header values out of range", 1);
  }
  std::vector<PermutationMap::Swap> swaps;
  swaps.reserve(t);
  long long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::int64_t a = 0, b = 0;
    std::string extra;
    if (!(row >> a >> b) || (row >> extra)) {
      throw FormatError("bad transposition line '" + line + "'", line_no);
    }
    swaps.emplace_back(static_cast<std::int32_t>(a), static_cast<std::int32_t>(b));
  }
  if (static_cast<int>(swaps.size()) != t) {
    throw FormatError("header declares " + std::to_string(t) + " swaps, file has " +
                      std::to_string(swaps.size()), line_no);
  }
  return PermutationMap::from_swaps(h, w, delta, seed, std::move(swaps));
}

PermutationMap load_permutation(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open permutation file: " + path);
  return read_permutation(is);
}

}  // namespace pixtok
