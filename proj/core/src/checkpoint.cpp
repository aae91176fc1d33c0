#include "pixtok/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pixtok/error.hpp"

namespace pixtok {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::size_t kMagicBytes = 8;
constexpr std::uint64_t kMaxHeaderBytes = 64ull << 20;
constexpr int kMaxRank = 8;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  // False on clean EOF before the first byte.
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

  void read(void* dst, std::size_t n, const char* what) {
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what,
                        static_cast<long long>(offset_ + is_.gcount()));
    }
    offset_ += n;
  }

  template <typename T>
  T get(const char* what) {
    T v;
    read(&v, sizeof(T), what);
    return v;
  }

  long long offset() const { return static_cast<long long>(offset_); }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

ParamList Checkpoint::with_prefix(const std::string& prefix) const {
  ParamList out;
  for (const auto& t : tensors) {
    if (t.name.rfind(prefix, 0) == 0) out.push_back({t.name.substr(prefix.size()), t.tensor});
  }
  return out;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write(kCheckpointMagic, kMagicBytes);
  const std::string header = ckpt.header.dump();
  put<std::uint64_t>(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.shape()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    const auto data = tensor.data();
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!os) throw Error("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    write_checkpoint(out, ckpt);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(std::istream& is) {
  Reader r(is);
  char magic[kMagicBytes];
  r.read(magic, kMagicBytes, "magic");
  if (std::memcmp(magic, kCheckpointMagic, kMagicBytes) != 0) {
    throw FormatError("not a checkpoint (bad magic)", 0);
  }
  const auto header_len = r.get<std::uint64_t>("header length");
  if (header_len > kMaxHeaderBytes) throw FormatError("implausible header length", r.offset() - 8);
  std::string header(header_len, '\0');
  const auto header_at = r.offset();
  r.read(header.data(), header.size(), "header");
  Checkpoint ckpt;
  try {
    ckpt.header = Json::parse(header);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(), header_at);
  }
  while (!r.at_end()) {
    const auto entry_at = r.offset();
    const auto name_len = r.get<std::uint32_t>("tensor name length");
    if (name_len == 0 || name_len > 4096) throw FormatError("bad tensor name length", entry_at);
    std::string name(name_len, '\0');
    r.read(name.data(), name.size(), "tensor name");
    const auto rank = r.get<std::uint8_t>("tensor rank");
    if (rank > kMaxRank) throw FormatError("tensor rank " + std::to_string(rank) + " too large", r.offset() - 1);
    Shape shape(rank);
    for (auto& d : shape) {
      const auto dim = r.get<std::uint64_t>("tensor dims");
      if (dim > (1ull << 40)) throw FormatError("implausible tensor dimension", r.offset() - 8);
      d = static_cast<std::int64_t>(dim);
    }
    if (ckpt.find(name)) throw FormatError("duplicate tensor '" + name + "'", entry_at);
    auto t = Tensor::zeros(shape);
    auto data = t.data();
    r.read(data.data(), data.size() * sizeof(float), "tensor payload");
    ckpt.tensors.push_back({std::move(name), std::move(t)});
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void load_parameters(const Checkpoint& ckpt, const ParamList& params) {
  for (const auto& [name, param] : params) {
    const Tensor* src = ckpt.find(name);
    if (!src) throw CheckpointMismatch(name, "checkpoint has no tensor '" + name + "'");
    if (src->shape() != param.shape()) {
      throw CheckpointMismatch(name, "shape mismatch for '" + name + "': checkpoint " +
                                         shape_str(src->shape()) + ", model " +
                                         shape_str(param.shape()));
    }
    auto dst = const_cast<Tensor&>(param).data();
    std::copy(src->data().begin(), src->data().end(), dst.begin());
  }
}

ModelConfig checkpoint_model_config(const Checkpoint& ckpt) {
  if (!ckpt.header.contains("model")) {
    throw CheckpointMismatch("model", "checkpoint header lacks a model config");
  }
  try {
    return model_config_from_json(ckpt.header.at("model"));
  } catch (const ConfigError& e) {
    throw CheckpointMismatch("model", std::string("checkpoint model config: ") + e.what());
  }
}

void check_model_compatible(const ModelConfig& expected, const ModelConfig& found,
                            bool encoder_only) {
  auto check = [](const char* field, auto want, auto got) {
    if (want != got) {
      throw CheckpointMismatch(field, std::string("checkpoint ") + field + " mismatch: expected " +
                                          std::to_string(want) + ", found " + std::to_string(got));
    }
  };
  check("layers", expected.layers, found.layers);
  check("dim", expected.dim, found.dim);
  check("mlp_dim", expected.mlp_dim, found.mlp_dim);
  check("heads", expected.heads, found.heads);
  check("image_size", expected.image_size, found.image_size);
  check("patch_size", expected.effective_patch(), found.effective_patch());
  if (expected.tokenizer != found.tokenizer) {
    throw CheckpointMismatch("tokenizer", "checkpoint tokenizer mismatch: expected " +
                                              to_string(expected.tokenizer) + ", found " +
                                              to_string(found.tokenizer));
  }
  if (expected.pe != found.pe) {
    throw CheckpointMismatch("pe", "checkpoint pe mismatch: expected " + to_string(expected.pe) +
                                       ", found " + to_string(found.pe));
  }
  if (expected.permutation != found.permutation) {
    throw CheckpointMismatch("permutation", "checkpoint permutation differs");
  }
  if (!encoder_only) {
    check("num_classes", expected.num_classes, found.num_classes);
    if (expected.head != found.head) {
      throw CheckpointMismatch("head", "checkpoint head mode mismatch");
    }
  }
}

}  // namespace pixtok
