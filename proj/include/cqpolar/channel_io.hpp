#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "cqpolar/channel.hpp"

namespace cqpolar {

CqChannel load_channel(const nlohmann::json& j, const NumericTolerances& tol = {});
CqChannel load_channel_file(const std::string& path, const NumericTolerances& tol = {});
// Only channels whose labels are single integers (no transforms applied).
nlohmann::json channel_to_json(const CqChannel& w);

struct PresetParams {
  int q = 2;
  int k = 2;
  double p = 0.11;
  double lambda = 0.5;
  double eps = 0.5;
  std::vector<double> angles;
  std::uint64_t seed = 0;
};

// classical-symmetric, pure-states, depolarized-orthogonal, random, erasure
CqChannel make_preset(const std::string& name, const PresetParams& p);
const std::vector<std::string>& preset_names();

}  // namespace cqpolar
