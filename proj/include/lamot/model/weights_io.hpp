// Copyright (c) 2026 lamot contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <lamot/model/network.hpp>

namespace lamot::model {

struct WeightFileError : std::runtime_error {
  explicit WeightFileError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return ~crc;
}

template <typename T>
void append(std::vector<uint8_t>& buf, const T& v) {
  const auto* p = reinterpret_cast<const uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T read_at(const std::vector<uint8_t>& buf, size_t& off) {
  if (off + sizeof(T) > buf.size()) throw WeightFileError("truncated weight file");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace detail

// Binary little-endian weight container:
//   magic[8] "LMTWGT1\0", u32 topology, u32 feature layout id,
//   u32 in/hidden/out dims, u32 depth, u64 parameter count,
//   f32 parameters in visitation order, u32 CRC32 of all preceding bytes.
inline constexpr char kWeightMagic[8] = {'L', 'M', 'T', 'W', 'G', 'T', '1', '\0'};

struct WeightHeader {
  Topology topology;
  uint32_t feature_layout;
  uint32_t in_dim, hidden_dim, out_dim, depth;
  uint64_t param_count;
};

template <typename Net, typename S>
void save_weights(const Net& net, Topology topology, const std::string& path) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kWeightMagic, kWeightMagic + 8);
  detail::append(buf, static_cast<uint32_t>(topology));
  detail::append(buf, features::kFeatureLayoutVersion);
  detail::append(buf, static_cast<uint32_t>(kInputDim));
  detail::append(buf, static_cast<uint32_t>(kHiddenDim));
  detail::append(buf, static_cast<uint32_t>(kOutputDim));
  detail::append(buf,
                 static_cast<uint32_t>(topology == Topology::kMlp ? kMlpHiddenLayers : 1));
  uint64_t count = 0;
  net.visit([&](const auto& m) { count += static_cast<uint64_t>(m.size()); });
  detail::append(buf, count);
  net.visit([&](const auto& m) {
    for (int i = 0; i < static_cast<int>(m.size()); ++i) {
      detail::append(buf, static_cast<float>(m.data()[i]));
    }
  });
  detail::append(buf, detail::crc32(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightFileError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError("cannot open weight file: " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

inline WeightHeader parse_header(const std::vector<uint8_t>& buf) {
  if (buf.size() < 8 || std::memcmp(buf.data(), kWeightMagic, 8) != 0) {
    throw WeightFileError("bad magic: not a weight file");
  }
  size_t off = 8;
  WeightHeader h;
  h.topology = static_cast<Topology>(detail::read_at<uint32_t>(buf, off));
  h.feature_layout = detail::read_at<uint32_t>(buf, off);
  h.in_dim = detail::read_at<uint32_t>(buf, off);
  h.hidden_dim = detail::read_at<uint32_t>(buf, off);
  h.out_dim = detail::read_at<uint32_t>(buf, off);
  h.depth = detail::read_at<uint32_t>(buf, off);
  h.param_count = detail::read_at<uint64_t>(buf, off);
  return h;
}

inline WeightHeader peek_weights(const std::string& path) {
  return parse_header(read_file_bytes(path));
}

template <typename Net, typename S>
void load_weights(Net& net, Topology expected, const std::string& path) {
  const std::vector<uint8_t> buf = read_file_bytes(path);
  const WeightHeader h = parse_header(buf);
  if (buf.size() < 4) throw WeightFileError("truncated weight file");
  const uint32_t stored_crc = [&] {
    uint32_t c;
    std::memcpy(&c, buf.data() + buf.size() - 4, 4);
    return c;
  }();
  if (detail::crc32(buf.data(), buf.size() - 4) != stored_crc) {
    throw WeightFileError("checksum mismatch: corrupt weight file");
  }
  if (h.topology != expected) {
    throw WeightFileError("topology mismatch: file holds a different architecture");
  }
  if (h.feature_layout != features::kFeatureLayoutVersion) {
    throw WeightFileError("feature layout version mismatch");
  }
  if (h.in_dim != kInputDim || h.hidden_dim != kHiddenDim ||
      h.out_dim != kOutputDim) {
    throw WeightFileError("dimension mismatch in weight file header");
  }
  uint64_t count = 0;
  net.visit([&](const auto& m) { count += static_cast<uint64_t>(m.size()); });
  if (h.param_count != count) {
    throw WeightFileError("parameter count mismatch");
  }
  size_t off = 8 + 6 * 4 + 8;
  if (buf.size() != off + count * 4 + 4) {
    throw WeightFileError("truncated weight file");
  }
  net.visit([&](auto& m) {
    for (int i = 0; i < static_cast<int>(m.size()); ++i) {
      m.data()[i] = static_cast<S>(detail::read_at<float>(buf, off));
    }
  });
}

template <typename S>
void save_mlp(const Mlp<S>& net, const std::string& path) {
  save_weights<Mlp<S>, S>(net, Topology::kMlp, path);
}
template <typename S>
void save_lstm(const Lstm<S>& net, const std::string& path) {
  save_weights<Lstm<S>, S>(net, Topology::kLstm, path);
}
template <typename S>
Mlp<S> load_mlp(const std::string& path) {
  Mlp<S> net = Mlp<S>::zero_like();
  load_weights<Mlp<S>, S>(net, Topology::kMlp, path);
  return net;
}
template <typename S>
Lstm<S> load_lstm(const std::string& path) {
  Lstm<S> net = Lstm<S>::zero_like();
  load_weights<Lstm<S>, S>(net, Topology::kLstm, path);
  return net;
}

}  // namespace lamot::model
