#include "forestseg/types.hpp"

#include <string>

namespace forestseg {

Channel channel_from_name(const std::string& name) {
  for (Channel c : kAllChannels) {
    if (name == channel_name(c)) return c;
  }
  throw ValidationError("unknown channel name: '" + name + "'");
}

SemanticClass class_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kNumClasses)) {
    throw ValidationError("class code out of range: " + std::to_string(code));
  }
  return static_cast<SemanticClass>(code);
}

void ChannelCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].channel != channel) {
      throw ValidationError("point " + std::to_string(i) +
                            " carries a different channel than the cloud");
    }
  }
}

std::map<SemanticClass, double> class_distribution(
    const MultispectralCloud& cloud) {
  std::array<std::uint64_t, kNumClasses> counts{};
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& lbl = cloud.points[i].label;
    if (!lbl) {
      throw ValidationError("unlabeled point at index " + std::to_string(i));
    }
    counts[static_cast<std::size_t>(*lbl)]++;
  }
  std::map<SemanticClass, double> dist;
  const double total = static_cast<double>(cloud.points.size());
  for (SemanticClass c : kAllClasses) {
    dist[c] = total > 0.0
                  ? static_cast<double>(counts[static_cast<std::size_t>(c)]) / total
                  : 0.0;
  }
  return dist;
}

}  // namespace forestseg
