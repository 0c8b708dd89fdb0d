// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>

#include <fmt/format.h>

namespace prism {
namespace {

constexpr char kMagic[8] = {'P', 'R', 'I', 'S', 'M', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv(const std::vector<std::uint8_t>& bytes, std::size_t count) {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < count; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void uint(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void tensor(const Tensor& t) {
    uint<std::uint8_t>(static_cast<std::uint8_t>(t.dtype()));
    uint<std::uint32_t>(static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) uint<std::uint64_t>(static_cast<std::uint64_t>(d));
    const auto n = static_cast<std::size_t>(t.numel());
    switch (t.dtype()) {
      case DType::f32:
        uint<std::uint64_t>(n * 4);
        for (float x : t.data<float>()) uint(std::bit_cast<std::uint32_t>(x));
        break;
      case DType::f64:
        uint<std::uint64_t>(n * 8);
        for (double x : t.data<double>()) uint(std::bit_cast<std::uint64_t>(x));
        break;
      case DType::i32:
        uint<std::uint64_t>(n * 4);
        for (std::int32_t x : t.data<std::int32_t>()) uint(static_cast<std::uint32_t>(x));
        break;
      case DType::boolean:
        uint<std::uint64_t>(n);
        for (std::uint8_t x : t.data<std::uint8_t>()) uint(x);
        break;
    }
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end, std::string source)
      : bytes_(bytes), end_(end), source_(std::move(source)) {}

  template <class T>
  T uint() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return value;
  }
  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    const auto tag = uint<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(DType::boolean)) fail(fmt::format("unknown dtype tag {}", tag));
    const auto dtype = static_cast<DType>(tag);
    const auto ndim = uint<std::uint32_t>();
    if (ndim > 16) fail("tensor rank out of range");
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      const auto d = uint<std::uint64_t>();
      if (d > end_) fail("tensor extent out of range");
      shape.push_back(static_cast<std::int64_t>(d));
      count *= d;
    }
    const auto bytes = uint<std::uint64_t>();
    const std::uint64_t width = dtype == DType::f64 ? 8 : dtype == DType::boolean ? 1 : 4;
    if (count > end_ || bytes != count * width) fail("tensor payload size does not match its shape");
    need(bytes);
    const auto n = static_cast<std::size_t>(count);
    switch (dtype) {
      case DType::f32: {
        std::vector<float> v(n);
        for (auto& x : v) x = std::bit_cast<float>(uint<std::uint32_t>());
        return Tensor(shape, std::move(v));
      }
      case DType::f64: {
        std::vector<double> v(n);
        for (auto& x : v) x = std::bit_cast<double>(uint<std::uint64_t>());
        return Tensor(shape, std::move(v));
      }
      case DType::i32: {
        std::vector<std::int32_t> v(n);
        for (auto& x : v) x = static_cast<std::int32_t>(uint<std::uint32_t>());
        return Tensor(shape, std::move(v));
      }
      case DType::boolean: {
        std::vector<std::uint8_t> v(n);
        for (auto& x : v) x = uint<std::uint8_t>();
        return Tensor(shape, std::move(v));
      }
    }
    fail("unreachable dtype");
  }
  bool done() const { return pos_ == end_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError(fmt::format("checkpoint '{}': {}", source_, what));
  }

 private:
  void need(std::uint64_t n) const {
    if (n > end_ - pos_) fail("truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string source_;
};

void write_section(Writer& w, const TensorMap& section) {
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(section.size()));
  for (const auto& [name, value] : section) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.tensor(value);
  }
}

TensorMap read_section(Reader& r) {
  TensorMap section;
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.uint<std::uint32_t>();
    auto name = r.string(len);
    if (!section.emplace(std::move(name), r.tensor()).second) r.fail("duplicate key in manifest");
  }
  return section;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(state.step));
  w.uint<std::uint64_t>(state.rng.hi);
  w.uint<std::uint64_t>(state.rng.lo);
  write_section(w, state.params);
  write_section(w, state.model_state);
  write_section(w, state.opt_state);
  w.uint<std::uint64_t>(fnv(w.bytes(), w.bytes().size()));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write checkpoint '{}'", tmp.string()));
    out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    out.flush();
    if (!out) throw IoError(fmt::format("failed writing checkpoint '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move checkpoint into '{}': {}", path.string(), ec.message()));
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(fmt::format("cannot open checkpoint '{}'", path.string()));
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(fmt::format("'{}' is not a checkpoint", path.string()));
  }
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  if (stored != fnv(bytes, body)) throw CheckpointError(fmt::format("checkpoint '{}': checksum mismatch", path.string()));

  Reader r(bytes, body, path.string());
  r.string(sizeof(kMagic));
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) r.fail(fmt::format("unsupported version {}", version));
  TrainState state;
  state.step = static_cast<std::int64_t>(r.uint<std::uint64_t>());
  state.rng.hi = r.uint<std::uint64_t>();
  state.rng.lo = r.uint<std::uint64_t>();
  state.params = read_section(r);
  state.model_state = read_section(r);
  state.opt_state = read_section(r);
  if (!r.done()) r.fail("trailing bytes");
  return state;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::int64_t step) {
  return dir / fmt::format("ckpt_{}.bin", step);
}

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return std::nullopt;
  static const std::regex pattern(R"(ckpt_(\d+)\.bin)");
  std::optional<std::filesystem::path> best;
  std::int64_t best_step = -1;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const auto step = std::stoll(m[1].str());
    if (step > best_step) {
      best_step = step;
      best = entry.path();
    }
  }
  return best;
}

}  // namespace prism
