#ifndef EELMO_LM_TARGETS_H_
#define EELMO_LM_TARGETS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eelmo/corpus/indexed.h"

namespace eelmo::lm {

enum class TargetKind { kNone, kWord, kEntity };

struct Target {
  TargetKind kind = TargetKind::kNone;
  std::int32_t id = -1;  // word id or dense entity id

  static Target None() { return {}; }
  static Target Word(corpus::WordId w) { return {TargetKind::kWord, static_cast<std::int32_t>(w)}; }
  static Target Entity(corpus::EntityId e) {
    return {TargetKind::kEntity, static_cast<std::int32_t>(e)};
  }
  bool operator==(const Target &) const = default;
};

// One target per direction for every position 0..T+1.
struct TargetPlan {
  std::vector<Target> forward;
  std::vector<Target> backward;

  bool operator==(const TargetPlan &) const = default;
};

// Forward position k predicts token k+1 and backward position k predicts
// token k-1. A mention [s,e] replaces the forward targets at k in [s-1, e-1]
// and the backward targets at k in [s+1, e+1] with its entity.
// Throws ValidationError for spans out of range or overlapping.
TargetPlan BuildTargetPlan(const corpus::IndexedParagraph &paragraph);

std::string DescribeTarget(const Target &target);

}  // namespace eelmo::lm

#endif  // EELMO_LM_TARGETS_H_
