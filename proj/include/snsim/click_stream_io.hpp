#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

// ClickStream file formats so the coincidence estimator can run on external
// time-tagger exports.
//
// CSV: header comment lines, then "channel,time_ns" rows; channel is x or
// xbar; times in ns, ascending per channel.
//
// Binary (little-endian): magic "SNTT0001", then duration (f64), seed (u64),
// n_x (u64), n_xbar (u64), n_x f64 timestamps, n_xbar f64 timestamps.

namespace snsim {

inline void save_click_stream_csv(const ClickStream& s, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_click_stream_csv: cannot open " + path);
  std::fprintf(f, "# snsim click stream, duration_ns=%.17g, seed=%llu\n", s.duration,
               static_cast<unsigned long long>(s.seed));
  std::fprintf(f, "channel,time_ns\n");
  for (double t : s.channel_x) std::fprintf(f, "x,%.17g\n", t);
  for (double t : s.channel_xbar) std::fprintf(f, "xbar,%.17g\n", t);
  std::fclose(f);
}

inline ClickStream load_click_stream_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_click_stream_csv: cannot open " + path);
  ClickStream s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("duration_ns=");
      if (pos != std::string::npos) s.duration = std::stod(line.substr(pos + 12));
      continue;
    }
    if (line.rfind("channel", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const double t = std::stod(line.substr(comma + 1));
    if (line.rfind("xbar", 0) == 0)
      s.channel_xbar.push_back(t);
    else
      s.channel_x.push_back(t);
  }
  if (s.duration == 0) {
    for (double t : s.channel_x) s.duration = std::max(s.duration, t);
    for (double t : s.channel_xbar) s.duration = std::max(s.duration, t);
  }
  return s;
}

inline void save_click_stream_binary(const ClickStream& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_click_stream_binary: cannot open " + path);
  const char magic[8] = {'S', 'N', 'T', 'T', '0', '0', '0', '1'};
  out.write(magic, 8);
  auto put_u64 = [&](std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
  };
  auto put_f64 = [&](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(bits);
  };
  put_f64(s.duration);
  put_u64(s.seed);
  put_u64(s.channel_x.size());
  put_u64(s.channel_xbar.size());
  for (double t : s.channel_x) put_f64(t);
  for (double t : s.channel_xbar) put_f64(t);
}

inline ClickStream load_click_stream_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_click_stream_binary: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "SNTT0001", 8) != 0)
    throw std::runtime_error("load_click_stream_binary: bad magic");
  auto get_u64 = [&]() {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  };
  auto get_f64 = [&]() {
    const std::uint64_t bits = get_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  };
  ClickStream s;
  s.duration = get_f64();
  s.seed = get_u64();
  const std::uint64_t nx = get_u64();
  const std::uint64_t nxb = get_u64();
  s.channel_x.resize(nx);
  s.channel_xbar.resize(nxb);
  for (auto& t : s.channel_x) t = get_f64();
  for (auto& t : s.channel_xbar) t = get_f64();
  if (!in) throw std::runtime_error("load_click_stream_binary: truncated file");
  return s;
}

}  // namespace snsim
