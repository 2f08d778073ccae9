#include "forestseg/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "forestseg/rng.hpp"

namespace forestseg {
namespace {

constexpr char kMagic[16] = {'M', 'S', 'F', 'O', 'R', 'E', 'S', 'T',
                             'C', 'L', 'O', 'U', 'D', '\0', '\0', '\0'};

std::string channels_to_string(std::uint8_t mask) {
  std::string s;
  for (Channel c : kAllChannels) {
    if ((mask >> static_cast<unsigned>(c)) & 1u) {
      if (!s.empty()) s += ',';
      s += channel_name(c);
    }
  }
  return s;
}

std::uint8_t channels_from_string(const std::string& s) {
  std::uint8_t mask = 0;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) mask |= (1u << static_cast<unsigned>(channel_from_name(item)));
  }
  return mask;
}

// -- text ------------------------------------------------------------------

void write_text_header(std::FILE* f, const CloudFileHeader& h) {
  std::fprintf(f, "# version %u\n", h.format_version);
  std::fprintf(f, "# channels %s\n", channels_to_string(h.channel_mask).c_str());
  std::fprintf(f, "# labels %d\n", h.has_labels ? 1 : 0);
  std::fprintf(f, "# znorm %d\n", h.has_z_normalized ? 1 : 0);
  std::fprintf(f, "# count %llu\n", static_cast<unsigned long long>(h.point_count));
}

double parse_double(const char*& p, std::size_t record, const char* what) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(p, &end);
  if (end == p) {
    throw IoError("record " + std::to_string(record) + ": missing or invalid " +
                  std::string(what));
  }
  if (!std::isfinite(v)) {
    throw IoError("record " + std::to_string(record) + ": non-finite " +
                  std::string(what));
  }
  p = end;
  return v;
}

long parse_long(const char*& p, std::size_t record, const char* what) {
  char* end = nullptr;
  const long v = std::strtol(p, &end, 10);
  if (end == p) {
    throw IoError("record " + std::to_string(record) + ": missing or invalid " +
                  std::string(what));
  }
  p = end;
  return v;
}

void expect_line_end(const char* p, std::size_t record) {
  while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
  if (*p != '\0') {
    throw IoError("record " + std::to_string(record) + ": trailing data");
  }
}

struct TextFile {
  CloudFileHeader header;
  std::vector<std::string> lines;  // data lines only
};

TextFile read_text_preamble(std::istream& in, const std::filesystem::path& path) {
  TextFile tf;
  bool saw_version = false, saw_channels = false, saw_count = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key, value;
      ls >> key;
      std::getline(ls, value);
      const auto first = value.find_first_not_of(' ');
      value = (first == std::string::npos) ? "" : value.substr(first);
      if (key == "version") {
        tf.header.format_version = static_cast<std::uint32_t>(std::stoul(value));
        saw_version = true;
      } else if (key == "channels") {
        tf.header.channel_mask = channels_from_string(value);
        saw_channels = true;
      } else if (key == "labels") {
        tf.header.has_labels = (value == "1");
      } else if (key == "znorm") {
        tf.header.has_z_normalized = (value == "1");
      } else if (key == "count") {
        tf.header.point_count = std::stoull(value);
        saw_count = true;
      }
      // unknown keys ignored
    } else {
      tf.lines.push_back(line);
    }
  }
  if (!saw_version || !saw_channels || !saw_count) {
    throw IoError(path.string() + ": missing header keys (version/channels/count)");
  }
  if (tf.header.format_version != 1) {
    throw IoError(path.string() + ": unsupported format version " +
                  std::to_string(tf.header.format_version));
  }
  if (tf.lines.size() != tf.header.point_count) {
    throw IoError(path.string() + ": header count " +
                  std::to_string(tf.header.point_count) + " != " +
                  std::to_string(tf.lines.size()) + " records");
  }
  return tf;
}

// -- binary ----------------------------------------------------------------

template <typename T>
void put(std::string& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const char*& p, const char* end) {
  if (p + sizeof(T) > end) throw IoError("truncated file");
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

void write_binary_header(std::string& buf, const CloudFileHeader& h) {
  buf.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, h.format_version);
  put<std::uint8_t>(buf, h.channel_mask);
  put<std::uint8_t>(buf, h.has_labels ? 1 : 0);
  put<std::uint8_t>(buf, h.has_z_normalized ? 1 : 0);
  put<std::uint8_t>(buf, 0);
  put<std::uint64_t>(buf, h.point_count);
}

CloudFileHeader read_binary_header(const char*& p, const char* end,
                                   const std::filesystem::path& path) {
  if (end - p < static_cast<std::ptrdiff_t>(sizeof(kMagic)) ||
      std::memcmp(p, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + ": bad magic");
  }
  p += sizeof(kMagic);
  CloudFileHeader h;
  h.format_version = take<std::uint32_t>(p, end);
  if (h.format_version != 1) {
    throw IoError(path.string() + ": unsupported format version " +
                  std::to_string(h.format_version));
  }
  h.channel_mask = take<std::uint8_t>(p, end);
  h.has_labels = take<std::uint8_t>(p, end) != 0;
  h.has_z_normalized = take<std::uint8_t>(p, end) != 0;
  take<std::uint8_t>(p, end);
  h.point_count = take<std::uint64_t>(p, end);
  return h;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

bool looks_binary(const std::string& data) {
  return data.size() >= sizeof(kMagic) &&
         std::memcmp(data.data(), kMagic, sizeof(kMagic)) == 0;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
  return FilePtr(f);
}

void finish_write(std::FILE* f, const std::filesystem::path& path) {
  if (std::ferror(f) || std::fflush(f) != 0) {
    throw IoError("write failed for " + path.string() + ": " + std::strerror(errno));
  }
}

}  // namespace

// -- channel cloud -----------------------------------------------------------

void write_channel_cloud(const ChannelCloud& cloud,
                         const std::filesystem::path& path, CloudFormat format) {
  CloudFileHeader h;
  h.set_channel(cloud.channel);
  h.has_labels = !cloud.points.empty() && cloud.points.front().label.has_value();
  h.point_count = cloud.points.size();

  if (format == CloudFormat::Text) {
    FilePtr f = open_for_write(path);
    write_text_header(f.get(), h);
    for (const auto& p : cloud.points) {
      std::fprintf(f.get(), "%.9f %.9f %.9f %.6f", p.x, p.y, p.z, p.reflectance_db);
      if (h.has_labels) {
        std::fprintf(f.get(), " %d", static_cast<int>(p.label.value()));
      }
      std::fputc('\n', f.get());
    }
    finish_write(f.get(), path);
  } else {
    std::string buf;
    buf.reserve(sizeof(kMagic) + 16 + cloud.points.size() * 29);
    write_binary_header(buf, h);
    for (const auto& p : cloud.points) {
      put<double>(buf, p.x);
      put<double>(buf, p.y);
      put<double>(buf, p.z);
      put<float>(buf, static_cast<float>(p.reflectance_db));
      if (h.has_labels) put<std::uint8_t>(buf, static_cast<std::uint8_t>(p.label.value()));
    }
    FilePtr f = open_for_write(path);
    if (std::fwrite(buf.data(), 1, buf.size(), f.get()) != buf.size()) {
      throw IoError("write failed for " + path.string() + ": " + std::strerror(errno));
    }
    finish_write(f.get(), path);
  }
}

ChannelCloud read_channel_cloud(const std::filesystem::path& path,
                                Channel expected_channel) {
  const std::string data = slurp(path);
  CloudFileHeader h;
  ChannelCloud cloud;
  cloud.channel = expected_channel;

  auto check_channel = [&](const CloudFileHeader& hdr) {
    if (hdr.channel_mask != (1u << static_cast<unsigned>(expected_channel))) {
      throw IoError(path.string() + ": channel mismatch, expected " +
                    std::string(channel_name(expected_channel)) + " got '" +
                    channels_to_string(hdr.channel_mask) + "'");
    }
  };

  if (looks_binary(data)) {
    const char* p = data.data();
    const char* end = data.data() + data.size();
    h = read_binary_header(p, end, path);
    check_channel(h);
    cloud.points.reserve(h.point_count);
    for (std::uint64_t i = 0; i < h.point_count; ++i) {
      ChannelPoint pt;
      pt.channel = expected_channel;
      pt.x = take<double>(p, end);
      pt.y = take<double>(p, end);
      pt.z = take<double>(p, end);
      if (h.has_z_normalized) take<double>(p, end);  // not stored on channel points
      pt.reflectance_db = take<float>(p, end);
      if (h.has_labels) pt.label = class_from_code(take<std::uint8_t>(p, end));
      if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z) ||
          !std::isfinite(pt.reflectance_db)) {
        throw IoError("record " + std::to_string(i) + ": non-finite value");
      }
      cloud.points.push_back(pt);
    }
  } else {
    std::istringstream in(data);
    TextFile tf = read_text_preamble(in, path);
    h = tf.header;
    check_channel(h);
    cloud.points.reserve(tf.lines.size());
    for (std::size_t i = 0; i < tf.lines.size(); ++i) {
      const char* p = tf.lines[i].c_str();
      ChannelPoint pt;
      pt.channel = expected_channel;
      pt.x = parse_double(p, i, "x");
      pt.y = parse_double(p, i, "y");
      pt.z = parse_double(p, i, "z");
      pt.reflectance_db = parse_double(p, i, "reflectance");
      if (h.has_labels) pt.label = class_from_code(static_cast<int>(parse_long(p, i, "label")));
      expect_line_end(p, i);
      cloud.points.push_back(pt);
    }
  }
  return cloud;
}

// -- multispectral cloud -----------------------------------------------------

void write_multispectral_cloud(const MultispectralCloud& cloud,
                               const std::filesystem::path& path,
                               CloudFormat format) {
  CloudFileHeader h;
  h.channel_mask = 0b111;
  h.has_labels = cloud.has_labels();
  h.has_z_normalized = cloud.has_z_normalized();
  h.point_count = cloud.points.size();

  if (format == CloudFormat::Text) {
    FilePtr f = open_for_write(path);
    write_text_header(f.get(), h);
    for (const auto& p : cloud.points) {
      std::fprintf(f.get(), "%.9f %.9f %.9f", p.x, p.y, p.z);
      if (h.has_z_normalized) std::fprintf(f.get(), " %.9f", p.z_normalized.value());
      std::fprintf(f.get(), " %.6f %.6f %.6f", p.reflectance(Channel::Swir),
                   p.reflectance(Channel::Nir), p.reflectance(Channel::Green));
      if (h.has_labels) std::fprintf(f.get(), " %d", static_cast<int>(p.label.value()));
      std::fputc('\n', f.get());
    }
    finish_write(f.get(), path);
  } else {
    std::string buf;
    buf.reserve(sizeof(kMagic) + 16 + cloud.points.size() * 45);
    write_binary_header(buf, h);
    for (const auto& p : cloud.points) {
      put<double>(buf, p.x);
      put<double>(buf, p.y);
      put<double>(buf, p.z);
      if (h.has_z_normalized) put<double>(buf, p.z_normalized.value());
      for (Channel c : kAllChannels) put<float>(buf, static_cast<float>(p.reflectance(c)));
      if (h.has_labels) put<std::uint8_t>(buf, static_cast<std::uint8_t>(p.label.value()));
    }
    FilePtr f = open_for_write(path);
    if (std::fwrite(buf.data(), 1, buf.size(), f.get()) != buf.size()) {
      throw IoError("write failed for " + path.string() + ": " + std::strerror(errno));
    }
    finish_write(f.get(), path);
  }
}

MultispectralCloud read_multispectral_cloud(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  MultispectralCloud cloud;

  auto check_multispectral = [&](const CloudFileHeader& hdr) {
    if (!hdr.multispectral()) {
      throw IoError(path.string() + ": expected all three channels, got '" +
                    channels_to_string(hdr.channel_mask) + "'");
    }
  };

  if (looks_binary(data)) {
    const char* p = data.data();
    const char* end = data.data() + data.size();
    CloudFileHeader h = read_binary_header(p, end, path);
    check_multispectral(h);
    cloud.points.reserve(h.point_count);
    for (std::uint64_t i = 0; i < h.point_count; ++i) {
      MultispectralPoint pt;
      pt.x = take<double>(p, end);
      pt.y = take<double>(p, end);
      pt.z = take<double>(p, end);
      if (h.has_z_normalized) pt.z_normalized = take<double>(p, end);
      for (Channel c : kAllChannels) pt.set_reflectance(c, take<float>(p, end));
      if (h.has_labels) pt.label = class_from_code(take<std::uint8_t>(p, end));
      cloud.points.push_back(pt);
    }
  } else {
    std::istringstream in(data);
    TextFile tf = read_text_preamble(in, path);
    check_multispectral(tf.header);
    cloud.points.reserve(tf.lines.size());
    for (std::size_t i = 0; i < tf.lines.size(); ++i) {
      const char* p = tf.lines[i].c_str();
      MultispectralPoint pt;
      pt.x = parse_double(p, i, "x");
      pt.y = parse_double(p, i, "y");
      pt.z = parse_double(p, i, "z");
      if (tf.header.has_z_normalized) pt.z_normalized = parse_double(p, i, "z_norm");
      for (Channel c : kAllChannels) {
        pt.set_reflectance(c, parse_double(p, i, channel_name(c)));
      }
      if (tf.header.has_labels) {
        pt.label = class_from_code(static_cast<int>(parse_long(p, i, "label")));
      }
      expect_line_end(p, i);
      cloud.points.push_back(pt);
    }
  }
  return cloud;
}

CloudFileHeader read_cloud_header(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  if (looks_binary(data)) {
    const char* p = data.data();
    return read_binary_header(p, data.data() + data.size(), path);
  }
  std::istringstream in(data);
  return read_text_preamble(in, path).header;
}

// -- split -------------------------------------------------------------------

SplitResult split_train_test(const std::vector<MultispectralCloud>& clouds,
                             const SplitSpec& spec) {
  if (clouds.empty()) throw ValidationError("split requires at least one cloud");
  if (!(spec.ratio_train > 0.0 && spec.ratio_train < 1.0)) {
    throw ValidationError("ratio_train must be in (0, 1)");
  }

  SplitResult result;
  Rng rng(spec.seed, /*stream=*/0x53504c49ULL);  // "SPLI"

  if (spec.unit == SplitUnit::PerPlot) {
    if (clouds.size() < 2) {
      throw ValidationError("per-plot split requires at least 2 clouds");
    }
    std::vector<std::size_t> order(clouds.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto n = clouds.size();
    auto k = static_cast<std::size_t>(
        std::llround(spec.ratio_train * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n - 1);
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < k; ++i) in_train[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i) {
      (in_train[i] ? result.train : result.test).push_back(clouds[i]);
    }
  } else {
    std::size_t total = 0;
    for (const auto& c : clouds) total += c.points.size();
    if (total < 2) throw ValidationError("per-point split requires at least 2 points");
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    auto k = static_cast<std::size_t>(
        std::llround(spec.ratio_train * static_cast<double>(total)));
    k = std::clamp<std::size_t>(k, 1, total - 1);
    std::vector<bool> in_train(total, false);
    for (std::size_t i = 0; i < k; ++i) in_train[order[i]] = true;

    MultispectralCloud train, test;
    train.provenance = "split train";
    test.provenance = "split test";
    train.points.reserve(k);
    test.points.reserve(total - k);
    std::size_t flat = 0;
    for (const auto& c : clouds) {
      for (const auto& p : c.points) {
        (in_train[flat] ? train : test).points.push_back(p);
        ++flat;
      }
    }
    result.train.push_back(std::move(train));
    result.test.push_back(std::move(test));
  }
  return result;
}

}  // namespace forestseg
