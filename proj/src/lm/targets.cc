#include "eelmo/lm/targets.h"

#include "eelmo/errors.h"

namespace eelmo::lm {

TargetPlan BuildTargetPlan(const corpus::IndexedParagraph &p) {
  const int t = p.length();
  if (t < 1) throw ValidationError("paragraph has no tokens");
  const std::size_t n = static_cast<std::size_t>(t) + 2;
  TargetPlan plan;
  plan.forward.assign(n, Target::None());
  plan.backward.assign(n, Target::None());
  for (int k = 0; k <= t; ++k) plan.forward[k] = Target::Word(p.words[k + 1]);
  for (int k = 1; k <= t + 1; ++k) plan.backward[k] = Target::Word(p.words[k - 1]);
  int last_end = 0;
  for (const corpus::IndexedMention &m : p.mentions) {
    if (m.start < 1 || m.end < m.start || m.end > t) {
      throw ValidationError("mention (" + std::to_string(m.start) + "," +
                            std::to_string(m.end) + ") outside [1," +
                            std::to_string(t) + "]");
    }
    if (m.start <= last_end) throw ValidationError("overlapping mentions");
    last_end = m.end;
    for (int k = m.start - 1; k <= m.end - 1; ++k) plan.forward[k] = Target::Entity(m.entity);
    for (int k = m.start + 1; k <= m.end + 1; ++k) plan.backward[k] = Target::Entity(m.entity);
  }
  return plan;
}

std::string DescribeTarget(const Target &target) {
  switch (target.kind) {
    case TargetKind::kWord: return "Word(" + std::to_string(target.id) + ")";
    case TargetKind::kEntity: return "Entity(" + std::to_string(target.id) + ")";
    case TargetKind::kNone: break;
  }
  return "None";
}

}  // namespace eelmo::lm
