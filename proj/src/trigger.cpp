#include "graphbd/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {

namespace {

constexpr std::uint64_t kErTag = 0x45525452;

int round_half_up_positive(double x) { return static_cast<int>(std::floor(x + 0.5)); }

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

}  // namespace

int trigger_size_from_gamma(double avg_nodes, double gamma) {
  if (!(avg_nodes > 0.0)) throw ArgumentError("trigger_size_from_gamma: avg_nodes must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ArgumentError("trigger_size_from_gamma: gamma must be in (0,1]");
  }
  return std::max(2, round_half_up_positive(gamma * avg_nodes));
}

TriggerGraph generate_er_trigger(int t, double rho, std::uint64_t seed) {
  if (t < 2) throw ArgumentError("generate_er_trigger: need at least 2 nodes");
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ArgumentError("generate_er_trigger: density must be in [0,1]");
  }
  TriggerGraph trigger;
  trigger.node_count = t;
  trigger.density = rho;
  trigger.seed = seed;
  Rng rng = make_rng(derive_seed(seed, kErTag));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < t; ++i) {
    for (int j = i + 1; j < t; ++j) {
      if (u(rng) < rho) trigger.edges.emplace_back(i, j);
    }
  }
  return trigger;
}

int feature_trigger_size(int feature_dim, double fraction) {
  if (feature_dim < 1) throw ArgumentError("feature_trigger_size: feature_dim must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ArgumentError("feature_trigger_size: fraction must be in (0,1]");
  }
  return std::max(1, round_half_up_positive(fraction * feature_dim));
}

FeatureTrigger build_feature_trigger(std::vector<int> indices, double fill_value,
                                     int feature_dim) {
  if (indices.empty()) throw ArgumentError("build_feature_trigger: empty index list");
  std::sort(indices.begin(), indices.end());
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || (feature_dim >= 0 && indices[i] >= feature_dim)) {
      throw ArgumentError("build_feature_trigger: index " + std::to_string(indices[i]) +
                          " out of range");
    }
    if (i > 0 && indices[i] == indices[i - 1]) {
      throw ArgumentError("build_feature_trigger: duplicate index " +
                          std::to_string(indices[i]));
    }
  }
  FeatureTrigger trigger;
  trigger.indices = std::move(indices);
  trigger.fill_value = fill_value;
  return trigger;
}

std::string trigger_to_text(const TriggerGraph& trigger) {
  std::ostringstream out;
  out << "kind subgraph\n";
  out << "nodes " << trigger.node_count << "\n";
  out << "density " << trigger.density << "\n";
  out << "seed " << trigger.seed << "\n";
  out << "edges";
  for (const auto& [u, v] : trigger.edges) out << ' ' << u << '-' << v;
  out << "\n";
  return out.str();
}

std::string trigger_to_text(const FeatureTrigger& trigger) {
  std::ostringstream out;
  out << "kind feature\n";
  out << "fill " << trigger.fill_value << "\n";
  out << "indices";
  for (int i : trigger.indices) out << ' ' << i;
  out << "\n";
  return out.str();
}

std::uint64_t trigger_hash(const TriggerGraph& trigger) {
  std::uint64_t h = kFnvBasis;
  h = fnv1a(h, 1);  // kind marker
  h = fnv1a(h, static_cast<std::uint64_t>(trigger.node_count));
  for (const auto& [u, v] : trigger.edges) {
    h = fnv1a(h, (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v));
  }
  return h;
}

std::uint64_t trigger_hash(const FeatureTrigger& trigger) {
  std::uint64_t h = kFnvBasis;
  h = fnv1a(h, 2);  // kind marker
  std::uint64_t fill_bits;
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  std::memcpy(&fill_bits, &trigger.fill_value, sizeof(fill_bits));
  h = fnv1a(h, fill_bits);
  for (int i : trigger.indices) h = fnv1a(h, static_cast<std::uint64_t>(i));
  return h;
}

}  // namespace graphbd
