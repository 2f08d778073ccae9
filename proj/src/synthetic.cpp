#include "forestseg/synthetic.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "forestseg/error.hpp"
#include "forestseg/rng.hpp"

namespace forestseg {
namespace {

constexpr double kTwoPi = 6.283185307179586;

// RNG stream ids per primitive family; the primitive index is added on top.
enum StreamBase : std::uint64_t {
  kStreamGround = 1ull << 32,
  kStreamTuft = 2ull << 32,
  kStreamTree = 3ull << 32,
  kStreamLog = 4ull << 32,
  kStreamThinning = 5ull << 32,
};

struct Tree {
  double x, y;
  double trunk_h, trunk_r;
  double crown_rx, crown_ry, crown_rz;
  int branch_count;
};

struct Tuft {
  double x, y, r, h;
};

struct Log {
  double x, y, azimuth, length, radius;
};

/// Exact integer allocation of `total` across weights (largest remainder).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  std::vector<std::size_t> out(weights.size(), 0);
  if (wsum <= 0.0 || total == 0) return out;

  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / wsum;
    out[i] = static_cast<std::size_t>(exact);
    assigned += out[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t j = 0; assigned < total; ++j, ++assigned) {
    out[remainders[j % remainders.size()].second]++;
  }
  return out;
}

MultispectralPoint make_point(double x, double y, double z, SemanticClass cls,
                              const SpectralModel& spectral, Rng& rng) {
  MultispectralPoint p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.label = cls;
  const auto& stats = spectral[static_cast<std::size_t>(cls)];
  for (std::size_t c = 0; c < 3; ++c) {
    p.set_reflectance(static_cast<Channel>(c),
                      stats[c].mean_db + stats[c].std_db * rng.next_normal());
  }
  return p;
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec) {
  if (!(spec.extent_x_m > 0.0) || !(spec.extent_y_m > 0.0)) {
    throw ValidationError("scene extent must be positive");
  }
  if (spec.total_points == 0) throw ValidationError("total_points must be > 0");
  if (spec.n_trees < 0) throw ValidationError("n_trees must be >= 0");
  for (double f : spec.class_fractions) {
    if (f < 0.0 || !std::isfinite(f)) throw ValidationError("class fractions must be >= 0");
  }
  for (const auto& per_class : spec.spectral) {
    for (const auto& s : per_class) {
      if (s.std_db < 0.0) throw ValidationError("spectral std must be >= 0");
    }
  }
  for (double r : spec.channel_density_ratio) {
    if (!(r > 0.0)) throw ValidationError("channel density ratios must be > 0");
  }
  if (!(spec.channel_keep_scale > 0.0) || spec.channel_keep_scale > 1.0) {
    throw ValidationError("channel_keep_scale must be in (0, 1]");
  }

  auto terrain = [&](double x, double) { return spec.terrain_slope * x; };

  // Tree-borne classes need trees to attach to.
  std::vector<double> fractions(spec.class_fractions.begin(), spec.class_fractions.end());
  if (spec.n_trees == 0) {
    for (SemanticClass c : {SemanticClass::Trunk, SemanticClass::Branches,
                            SemanticClass::Foliage, SemanticClass::WoodyDebris}) {
      fractions[static_cast<std::size_t>(c)] = 0.0;
    }
  }
  const auto class_counts = apportion(spec.total_points, fractions);
  if (std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0}) == 0) {
    throw ValidationError("class fractions select no points");
  }

  // Primitive placement (positions and shapes first, points second, each
  // from its own stream).
  std::vector<Tree> trees(spec.n_trees);
  for (int t = 0; t < spec.n_trees; ++t) {
    Rng rng(spec.seed, kStreamTree + static_cast<std::uint64_t>(t));
    Tree& tree = trees[t];
    tree.x = rng.next_uniform(0.0, spec.extent_x_m);
    tree.y = rng.next_uniform(0.0, spec.extent_y_m);
    tree.trunk_h = rng.next_uniform(5.0, 9.0);
    tree.trunk_r = rng.next_uniform(0.10, 0.22);
    tree.crown_rx = rng.next_uniform(1.4, 2.4);
    tree.crown_ry = rng.next_uniform(1.4, 2.4);
    tree.crown_rz = rng.next_uniform(1.8, 3.2);
    tree.branch_count = 4 + static_cast<int>(rng.next_below(4));
  }

  const double area = spec.extent_x_m * spec.extent_y_m;
  const int n_tufts = std::max(1, static_cast<int>(std::lround(area * 0.06)));
  std::vector<Tuft> tufts(n_tufts);
  for (int t = 0; t < n_tufts; ++t) {
    Rng rng(spec.seed, kStreamTuft + static_cast<std::uint64_t>(t));
    tufts[t] = {rng.next_uniform(0.0, spec.extent_x_m), rng.next_uniform(0.0, spec.extent_y_m),
                rng.next_uniform(0.15, 0.50), rng.next_uniform(0.10, 0.50)};
  }

  const int n_logs = spec.n_trees > 0 ? std::max(2, spec.n_trees / 6) : 0;
  std::vector<Log> logs(n_logs);
  for (int t = 0; t < n_logs; ++t) {
    Rng rng(spec.seed, kStreamLog + static_cast<std::uint64_t>(t));
    logs[t] = {rng.next_uniform(0.0, spec.extent_x_m), rng.next_uniform(0.0, spec.extent_y_m),
               rng.next_uniform(0.0, kTwoPi), rng.next_uniform(1.2, 3.0),
               rng.next_uniform(0.06, 0.15)};
  }

  SyntheticScene scene;
  auto& ref = scene.reference.points;
  ref.reserve(spec.total_points);

  // Ground.
  {
    Rng rng(spec.seed, kStreamGround);
    const auto n = class_counts[static_cast<std::size_t>(SemanticClass::Ground)];
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.next_uniform(0.0, spec.extent_x_m);
      const double y = rng.next_uniform(0.0, spec.extent_y_m);
      const double z = terrain(x, y) + 0.02 * rng.next_normal();
      ref.push_back(make_point(x, y, z, SemanticClass::Ground, spec.spectral, rng));
    }
  }

  // Low vegetation tufts: upper-half ellipsoids sitting on the terrain.
  {
    const auto n = class_counts[static_cast<std::size_t>(SemanticClass::LowVegetation)];
    const auto per_tuft = apportion(n, std::vector<double>(tufts.size(), 1.0));
    for (std::size_t t = 0; t < tufts.size(); ++t) {
      Rng rng(spec.seed, kStreamTuft + (1ull << 16) + t);
      const Tuft& tf = tufts[t];
      for (std::size_t i = 0; i < per_tuft[t]; ++i) {
        double ux, uy, uz;
        do {
          ux = rng.next_uniform(-1.0, 1.0);
          uy = rng.next_uniform(-1.0, 1.0);
          uz = rng.next_uniform(0.0, 1.0);
        } while (ux * ux + uy * uy + uz * uz > 1.0);
        const double x = tf.x + tf.r * ux;
        const double y = tf.y + tf.r * uy;
        const double z = terrain(x, y) + tf.h * uz;
        ref.push_back(make_point(x, y, z, SemanticClass::LowVegetation, spec.spectral, rng));
      }
    }
  }

  // Trunks: cylinder side walls.
  if (spec.n_trees > 0) {
    std::vector<double> trunk_weights(trees.size());
    for (std::size_t t = 0; t < trees.size(); ++t) {
      trunk_weights[t] = trees[t].trunk_h * trees[t].trunk_r;
    }
    const auto per_tree = apportion(
        class_counts[static_cast<std::size_t>(SemanticClass::Trunk)], trunk_weights);
    for (std::size_t t = 0; t < trees.size(); ++t) {
      Rng rng(spec.seed, kStreamTree + (1ull << 16) + t);
      const Tree& tree = trees[t];
      const double base = terrain(tree.x, tree.y);
      for (std::size_t i = 0; i < per_tree[t]; ++i) {
        const double theta = rng.next_uniform(0.0, kTwoPi);
        const double h = rng.next_uniform(0.0, tree.trunk_h);
        const double r = tree.trunk_r + 0.005 * rng.next_normal();
        ref.push_back(make_point(tree.x + r * std::cos(theta), tree.y + r * std::sin(theta),
                                 base + h, SemanticClass::Trunk, spec.spectral, rng));
      }
    }
  }

  // Branches: thin oblique segments leaving the upper trunk.
  if (spec.n_trees > 0) {
    std::vector<double> w(trees.size());
    for (std::size_t t = 0; t < trees.size(); ++t) w[t] = trees[t].branch_count;
    const auto per_tree = apportion(
        class_counts[static_cast<std::size_t>(SemanticClass::Branches)], w);
    for (std::size_t t = 0; t < trees.size(); ++t) {
      Rng rng(spec.seed, kStreamTree + (2ull << 16) + t);
      const Tree& tree = trees[t];
      const double base = terrain(tree.x, tree.y);
      struct Branch {
        double ax, ay, az, dx, dy, dz, len;
      };
      std::vector<Branch> branches(tree.branch_count);
      for (auto& b : branches) {
        const double attach = rng.next_uniform(0.5, 0.95) * tree.trunk_h;
        const double azimuth = rng.next_uniform(0.0, kTwoPi);
        const double pitch = rng.next_uniform(-0.15, 0.45);
        b.ax = tree.x;
        b.ay = tree.y;
        b.az = base + attach;
        b.dx = std::cos(azimuth) * std::cos(pitch);
        b.dy = std::sin(azimuth) * std::cos(pitch);
        b.dz = std::sin(pitch);
        b.len = rng.next_uniform(0.9, 2.0);
      }
      for (std::size_t i = 0; i < per_tree[t]; ++i) {
        const auto& b = branches[rng.next_below(branches.size())];
        const double s = rng.next_uniform(0.0, 1.0) * b.len;
        ref.push_back(make_point(b.ax + s * b.dx + 0.015 * rng.next_normal(),
                                 b.ay + s * b.dy + 0.015 * rng.next_normal(),
                                 b.az + s * b.dz + 0.015 * rng.next_normal(),
                                 SemanticClass::Branches, spec.spectral, rng));
      }
    }
  }

  // Foliage: uniform inside crown ellipsoids.
  if (spec.n_trees > 0) {
    std::vector<double> w(trees.size());
    for (std::size_t t = 0; t < trees.size(); ++t) {
      w[t] = trees[t].crown_rx * trees[t].crown_ry * trees[t].crown_rz;
    }
    const auto per_tree = apportion(
        class_counts[static_cast<std::size_t>(SemanticClass::Foliage)], w);
    for (std::size_t t = 0; t < trees.size(); ++t) {
      Rng rng(spec.seed, kStreamTree + (3ull << 16) + t);
      const Tree& tree = trees[t];
      const double base = terrain(tree.x, tree.y);
      const double cz = base + tree.trunk_h + 0.5 * tree.crown_rz;
      for (std::size_t i = 0; i < per_tree[t]; ++i) {
        double ux, uy, uz;
        do {
          ux = rng.next_uniform(-1.0, 1.0);
          uy = rng.next_uniform(-1.0, 1.0);
          uz = rng.next_uniform(-1.0, 1.0);
        } while (ux * ux + uy * uy + uz * uz > 1.0);
        ref.push_back(make_point(tree.x + tree.crown_rx * ux, tree.y + tree.crown_ry * uy,
                                 cz + tree.crown_rz * uz, SemanticClass::Foliage,
                                 spec.spectral, rng));
      }
    }
  }

  // Woody debris: upper surface of horizontal logs resting on the ground.
  if (n_logs > 0) {
    const auto per_log = apportion(
        class_counts[static_cast<std::size_t>(SemanticClass::WoodyDebris)],
        std::vector<double>(logs.size(), 1.0));
    for (std::size_t t = 0; t < logs.size(); ++t) {
      Rng rng(spec.seed, kStreamLog + (1ull << 16) + t);
      const Log& lg = logs[t];
      const double ax = std::cos(lg.azimuth), ay = std::sin(lg.azimuth);
      for (std::size_t i = 0; i < per_log[t]; ++i) {
        const double s = rng.next_uniform(-0.5, 0.5) * lg.length;
        const double phi = rng.next_uniform(0.0, 3.141592653589793);
        const double x = lg.x + s * ax - lg.radius * std::cos(phi) * ay;
        const double y = lg.y + s * ay + lg.radius * std::cos(phi) * ax;
        const double z = terrain(x, y) + lg.radius + lg.radius * std::sin(phi) * 0.999;
        ref.push_back(make_point(x, y, z, SemanticClass::WoodyDebris, spec.spectral, rng));
      }
    }
  }

  scene.reference.provenance =
      "synthetic seed=" + std::to_string(spec.seed) +
      " total_points=" + std::to_string(spec.total_points) +
      " n_trees=" + std::to_string(spec.n_trees);

  // Independent per-channel thinnings in Table-2-like density ratios.
  const double max_ratio =
      std::max({spec.channel_density_ratio[0], spec.channel_density_ratio[1],
                spec.channel_density_ratio[2]});
  std::array<double, 3> keep{};
  for (std::size_t c = 0; c < 3; ++c) {
    keep[c] = spec.channel_density_ratio[c] / max_ratio * spec.channel_keep_scale;
  }

  scene.swir.channel = Channel::Swir;
  scene.nir.channel = Channel::Nir;
  scene.green.channel = Channel::Green;
  ChannelCloud* outs[3] = {&scene.swir, &scene.nir, &scene.green};

  Rng thin(spec.seed, kStreamThinning);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const bool take = thin.next_double() < keep[c];
      if (!take) continue;
      ChannelPoint cp;
      cp.x = ref[i].x;
      cp.y = ref[i].y;
      cp.z = ref[i].z;
      cp.channel = static_cast<Channel>(c);
      cp.reflectance_db = ref[i].reflectance(static_cast<Channel>(c));
      cp.label = ref[i].label;
      outs[c]->points.push_back(cp);
    }
  }
  return scene;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));

  SceneSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto as_double = [&] { return std::stod(value); };

    if (key == "extent_x") {
      spec.extent_x_m = as_double();
    } else if (key == "extent_y") {
      spec.extent_y_m = as_double();
    } else if (key == "slope") {
      spec.terrain_slope = as_double();
    } else if (key == "n_trees") {
      spec.n_trees = std::stoi(value);
    } else if (key == "total_points") {
      spec.total_points = std::stoull(value);
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else if (key == "keep_scale") {
      spec.channel_keep_scale = as_double();
    } else if (key.rfind("ratio_", 0) == 0) {
      spec.channel_density_ratio[static_cast<std::size_t>(channel_from_name(key.substr(6)))] =
          as_double();
    } else if (key.rfind("fraction_", 0) == 0) {
      const std::string cls = key.substr(9);
      bool found = false;
      for (SemanticClass c : kAllClasses) {
        if (cls == class_name(c)) {
          spec.class_fractions[static_cast<std::size_t>(c)] = as_double();
          found = true;
        }
      }
      if (!found) throw ValidationError(path.string() + ": unknown class in key '" + key + "'");
    } else if (key.rfind("spectral_", 0) == 0) {
      // spectral_<class>_<channel>_<mean|std>
      std::string rest = key.substr(9);
      const auto last = rest.rfind('_');
      if (last == std::string::npos) throw ValidationError("bad spectral key '" + key + "'");
      const std::string stat = rest.substr(last + 1);
      rest.erase(last);
      const auto chan_pos = rest.rfind('_');
      if (chan_pos == std::string::npos) throw ValidationError("bad spectral key '" + key + "'");
      const Channel ch = channel_from_name(rest.substr(chan_pos + 1));
      rest.erase(chan_pos);
      bool found = false;
      for (SemanticClass c : kAllClasses) {
        if (rest == class_name(c)) {
          auto& entry =
              spec.spectral[static_cast<std::size_t>(c)][static_cast<std::size_t>(ch)];
          if (stat == "mean") {
            entry.mean_db = as_double();
          } else if (stat == "std") {
            entry.std_db = as_double();
          } else {
            throw ValidationError("bad spectral key '" + key + "'");
          }
          found = true;
        }
      }
      if (!found) throw ValidationError(path.string() + ": unknown class in key '" + key + "'");
    } else {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
    }
  }
  return spec;
}

void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
  std::fprintf(f, "# synthetic scene configuration\n");
  std::fprintf(f, "extent_x = %g\nextent_y = %g\nslope = %g\n", spec.extent_x_m,
               spec.extent_y_m, spec.terrain_slope);
  std::fprintf(f, "n_trees = %d\ntotal_points = %zu\nseed = %llu\nkeep_scale = %g\n",
               spec.n_trees, spec.total_points,
               static_cast<unsigned long long>(spec.seed), spec.channel_keep_scale);
  for (Channel c : kAllChannels) {
    std::fprintf(f, "ratio_%s = %g\n", channel_name(c),
                 spec.channel_density_ratio[static_cast<std::size_t>(c)]);
  }
  for (SemanticClass c : kAllClasses) {
    std::fprintf(f, "fraction_%s = %g\n", class_name(c),
                 spec.class_fractions[static_cast<std::size_t>(c)]);
  }
  for (SemanticClass c : kAllClasses) {
    for (Channel ch : kAllChannels) {
      const auto& s =
          spec.spectral[static_cast<std::size_t>(c)][static_cast<std::size_t>(ch)];
      std::fprintf(f, "spectral_%s_%s_mean = %g\nspectral_%s_%s_std = %g\n", class_name(c),
                   channel_name(ch), s.mean_db, class_name(c), channel_name(ch), s.std_db);
    }
  }
  const bool bad = std::ferror(f) || std::fflush(f) != 0;
  std::fclose(f);
  if (bad) throw IoError("write failed for " + path.string());
}

}  // namespace forestseg
