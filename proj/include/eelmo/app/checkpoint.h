#ifndef EELMO_APP_CHECKPOINT_H_
#define EELMO_APP_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "eelmo/app/config.h"
#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/tensor.h"
#include "json.hpp"

namespace eelmo::app {

inline constexpr const char *kCheckpointMagic = "EELMO-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

// File layout:
//   EELMO-CHECKPOINT <version>\n
//   <manifest byte count>\n
//   <manifest JSON>
//   <payload: little-endian float64 values, parameters back to back>
// The manifest lists id, shape, byte offset and count per parameter, the
// run config text and free-form metadata.
struct Checkpoint {
  std::string kind;  // "lm" or "ranker"
  RunConfig config;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, net::Tensor>> tensors;

  void Capture(const std::vector<net::Parameter *> &params);
  // Copies values into the parameters by id. Throws FormatError for a
  // missing id and DimensionError for a shape mismatch.
  void Restore(const std::vector<net::Parameter *> &params) const;
  const net::Tensor &Find(const std::string &id) const;
};

std::string SerializeCheckpoint(const Checkpoint &checkpoint);
Checkpoint ParseCheckpoint(const std::string &bytes);
void SaveCheckpoint(const std::string &path, const Checkpoint &checkpoint);
Checkpoint LoadCheckpoint(const std::string &path);

}  // namespace eelmo::app

#endif  // EELMO_APP_CHECKPOINT_H_
