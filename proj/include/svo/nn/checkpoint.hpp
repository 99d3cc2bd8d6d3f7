#pragma once

// Versioned little-endian checkpoint container.
//
// Layout:
//   magic "SVOCKPT\0" | u32 format version | u32 algorithm tag | f64 svo [deg]
//   | u64 training step | u64 total steps | u64 seed | str config hash
//   | str toolkit version | u32 n + i32[n] policy layer sizes
//   | u32 array count | per array: str name, u32 n + i32[n] shape,
//     u64 count + f64[count] values (row-major network parameters)
//   | u64 FNV-1a checksum of every preceding byte
// where str = u32 length + bytes.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "svo/common.hpp"

namespace svo::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic = {'S', 'V', 'O', 'C', 'K', 'P', 'T', '\0'};

class CheckpointError : public Error {
public:
  using Error::Error;
};

class CheckpointVersionError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

enum class Algo : std::uint32_t { Ppo = 1, Sac = 2 };

inline std::string_view to_string(Algo a) { return a == Algo::Ppo ? "ppo" : "sac"; }

struct NamedArray {
  std::string name;
  std::vector<int> shape;
  Eigen::VectorXd values;

  bool operator==(const NamedArray& o) const {
    return name == o.name && shape == o.shape && values == o.values;
  }
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  Algo algo = Algo::Ppo;
  double svo_deg = 0.0;
  std::uint64_t step = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string toolkit = kToolkitVersion;
  std::vector<int> layer_sizes;
  std::vector<NamedArray> arrays;

  const NamedArray& array(std::string_view name) const {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw CheckpointError("checkpoint has no array named '" + std::string(name) + "'");
  }
  bool has(std::string_view name) const {
    for (const auto& a : arrays)
      if (a.name == name) return true;
    return false;
  }
  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

inline std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

class ByteWriter {
public:
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
  explicit ByteReader(const std::vector<std::uint8_t>& b, std::size_t end) : b_(b), end_(end) {}

  template <class T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<int> ints() {
    const std::uint32_t n = u32();
    need(static_cast<std::size_t>(n) * 4);
    std::vector<int> out(n);
    for (auto& v : out) v = i32();
    return out;
  }
  bool at_end() const { return pos_ == end_; }

private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw CheckpointError("corrupt checkpoint: truncated data");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(c.version);
  w.u32(static_cast<std::uint32_t>(c.algo));
  w.f64(c.svo_deg);
  w.u64(c.step);
  w.u64(c.total_steps);
  w.u64(c.seed);
  w.str(c.config_hash);
  w.str(c.toolkit);
  w.u32(static_cast<std::uint32_t>(c.layer_sizes.size()));
  for (int s : c.layer_sizes) w.i32(s);
  w.u32(static_cast<std::uint32_t>(c.arrays.size()));
  for (const auto& a : c.arrays) {
    w.str(a.name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (int s : a.shape) w.i32(s);
    w.u64(static_cast<std::uint64_t>(a.values.size()));
    for (Eigen::Index i = 0; i < a.values.size(); ++i) w.f64(a.values[i]);
  }
  auto& bytes = w.bytes();
  w.u64(detail::fnv1a(bytes.data(), bytes.size()));
  return std::move(bytes);
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kPrefix = kCheckpointMagic.size() + 4;
  if (bytes.size() < kPrefix + 8) throw CheckpointError("corrupt checkpoint: file too short");
  if (std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0)
    throw CheckpointError("corrupt checkpoint: bad magic");

  const std::size_t body = bytes.size() - 8;
  detail::ByteReader r(bytes, bytes.size());
  for (std::size_t i = 0; i < kCheckpointMagic.size(); ++i) r.uint<std::uint8_t>();
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion)
    throw CheckpointVersionError("checkpoint format version " + std::to_string(c.version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");

  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  if (stored != detail::fnv1a(bytes.data(), body))
    throw CheckpointError("corrupt checkpoint: checksum mismatch (truncated or modified file)");

  detail::ByteReader in(bytes, body);
  for (std::size_t i = 0; i < kPrefix; ++i) in.uint<std::uint8_t>();
  const std::uint32_t algo = in.u32();
  if (algo != static_cast<std::uint32_t>(Algo::Ppo) && algo != static_cast<std::uint32_t>(Algo::Sac))
    throw CheckpointError("corrupt checkpoint: unknown algorithm tag");
  c.algo = static_cast<Algo>(algo);
  c.svo_deg = in.f64();
  c.step = in.u64();
  c.total_steps = in.u64();
  c.seed = in.u64();
  c.config_hash = in.str();
  c.toolkit = in.str();
  c.layer_sizes = in.ints();
  const std::uint32_t n_arrays = in.u32();
  for (std::uint32_t k = 0; k < n_arrays; ++k) {
    NamedArray a;
    a.name = in.str();
    a.shape = in.ints();
    const std::uint64_t count = in.u64();
    if (count > (body / 8)) throw CheckpointError("corrupt checkpoint: array length out of range");
    a.values.resize(static_cast<Eigen::Index>(count));
    for (std::uint64_t i = 0; i < count; ++i) a.values[static_cast<Eigen::Index>(i)] = in.f64();
    c.arrays.push_back(std::move(a));
  }
  if (!in.at_end()) throw CheckpointError("corrupt checkpoint: trailing bytes");
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const auto bytes = encode_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace svo::nn
