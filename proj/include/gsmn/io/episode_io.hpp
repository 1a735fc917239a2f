#pragma once

#include <zlib.h>

#include <filesystem>

#include "gsmn/io/binary.hpp"
#include "gsmn/simulator.hpp"

namespace gsmn::io {

inline constexpr char kEpisodeMagic[8] = {'G', 'S', 'E', 'P', 'I', 'S', '0', '1'};

namespace detail {

inline std::vector<uint8_t> deflate_bytes(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> out(bound);
  require(compress2(out.data(), &bound, raw.data(), uLong(raw.size()), 6) == Z_OK,
          "episode_io: deflate failed");
  out.resize(bound);
  return out;
}

inline std::vector<uint8_t> inflate_bytes(const std::vector<uint8_t>& packed, size_t raw_size) {
  std::vector<uint8_t> out(raw_size);
  uLongf size = uLongf(raw_size);
  require(uncompress(out.data(), &size, packed.data(), uLong(packed.size())) == Z_OK && size == raw_size,
          "episode_io: inflate failed");
  return out;
}

}  // namespace detail

// One episode: header, instruction, then per step the poses and actions as
// 32-bit floats plus a losslessly deflated RGB frame (size 0 when absent).
inline void write_episode(std::ostream& out, const sim::EpisodeRecord& ep) {
  out.write(kEpisodeMagic, 8);
  put_u32(out, uint32_t(ep.task_index));
  put_u32(out, ep.stopped ? 1 : 0);
  put_u32(out, uint32_t(ep.instruction.size()));
  for (const auto& w : ep.instruction) put_string(out, w);
  put_u32(out, uint32_t(ep.tokens.size()));
  for (int t : ep.tokens) put_u32(out, uint32_t(t));
  put_u32(out, uint32_t(ep.steps.size()));
  for (const sim::EpisodeStep& s : ep.steps) {
    auto put_pose = [&](const Pose& p) {
      put_f32(out, float(p.p.x));
      put_f32(out, float(p.p.y));
      put_f32(out, float(p.yaw));
      put_f32(out, float(p.altitude));
    };
    auto put_action = [&](const sim::Action& a) {
      put_f32(out, float(a.v));
      put_f32(out, float(a.omega));
      put_f32(out, float(a.p_stop));
    };
    put_pose(s.true_pose);
    put_pose(s.observed_pose);
    put_action(s.taken);
    put_action(s.expert);
    if (s.image.empty()) {
      put_u32(out, 0);
      put_u32(out, 0);
      put_u32(out, 0);
    } else {
      put_u32(out, uint32_t(s.image.width));
      put_u32(out, uint32_t(s.image.height));
      put_bytes(out, detail::deflate_bytes(s.image.rgb));
    }
  }
}

inline sim::EpisodeRecord read_episode(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  require(bool(in) && std::memcmp(magic, kEpisodeMagic, 8) == 0, "episode_io: bad magic or version");
  sim::EpisodeRecord ep;
  ep.task_index = int(get_u32(in));
  ep.stopped = get_u32(in) != 0;
  ep.instruction.resize(get_u32(in));
  for (auto& w : ep.instruction) w = get_string(in);
  ep.tokens.resize(get_u32(in));
  for (auto& t : ep.tokens) t = int(get_u32(in));
  ep.steps.resize(get_u32(in));
  for (sim::EpisodeStep& s : ep.steps) {
    auto get_pose = [&] {
      Pose p;
      p.p.x = get_f32(in);
      p.p.y = get_f32(in);
      p.yaw = get_f32(in);
      p.altitude = get_f32(in);
      return p;
    };
    auto get_action = [&] {
      sim::Action a;
      a.v = get_f32(in);
      a.omega = get_f32(in);
      a.p_stop = get_f32(in);
      return a;
    };
    s.true_pose = get_pose();
    s.observed_pose = get_pose();
    s.taken = get_action();
    s.expert = get_action();
    const int w = int(get_u32(in));
    const int h = int(get_u32(in));
    const auto packed = get_bytes(in);
    if (w > 0 && h > 0) {
      s.image.width = w;
      s.image.height = h;
      s.image.rgb = detail::inflate_bytes(packed, size_t(w) * size_t(h) * 3);
    }
  }
  return ep;
}

// Episode archive: episodes appended to one file, with a sidecar index file
// listing the byte offset of each episode.
class EpisodeWriter {
 public:
  EpisodeWriter(const std::filesystem::path& data_path, const std::filesystem::path& index_path)
      : out_(data_path, std::ios::binary), index_(index_path, std::ios::binary) {
    require(out_.good() && index_.good(), "EpisodeWriter: cannot open output files");
    index_.write("GSEPIDX1", 8);
  }

  void add(const sim::EpisodeRecord& ep) {
    put_u64(index_, uint64_t(out_.tellp()));
    write_episode(out_, ep);
    ++count_;
  }

  size_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::ofstream index_;
  size_t count_ = 0;
};

class EpisodeReader {
 public:
  EpisodeReader(const std::filesystem::path& data_path, const std::filesystem::path& index_path)
      : in_(data_path, std::ios::binary) {
    require(in_.good(), "EpisodeReader: cannot open " + data_path.string());
    std::ifstream idx(index_path, std::ios::binary);
    require(idx.good(), "EpisodeReader: cannot open " + index_path.string());
    char magic[8];
    idx.read(magic, 8);
    require(bool(idx) && std::memcmp(magic, "GSEPIDX1", 8) == 0, "EpisodeReader: bad index header");
    while (true) {
      unsigned char b[8];
      idx.read(reinterpret_cast<char*>(b), 8);
      if (!idx) break;
      uint64_t off = 0;
      for (int i = 7; i >= 0; --i) off = off << 8 | b[i];
      offsets_.push_back(off);
    }
  }

  size_t count() const { return offsets_.size(); }

  sim::EpisodeRecord read(size_t i) {
    require(i < offsets_.size(), "EpisodeReader: index out of range");
    in_.clear();
    in_.seekg(std::streamoff(offsets_[i]));
    return read_episode(in_);
  }

 private:
  std::ifstream in_;
  std::vector<uint64_t> offsets_;
};

}  // namespace gsmn::io
