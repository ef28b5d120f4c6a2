#pragma once

#include <cstdint>

#include "scribblevs/common.hpp"
#include "scribblevs/losses.hpp"
#include "scribblevs/rpd.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

enum class Network { kStudent, kTeacher };

inline const char* network_name(Network n) { return n == Network::kStudent ? "student" : "teacher"; }

/// Result of one student/teacher competition. The winner is the network with
/// the lower scribble cross-entropy, ties going to the student, and the
/// pseudo labels are produced from the winner's prediction.
template <typename T>
struct CompetitionOutcome {
  Network winner = Network::kStudent;
  T loss_student = T(0);
  T loss_teacher = T(0);
  PseudoLabelMap pseudo_labels;
};

/// Dynamic competitive selection. Evaluates both predictions against the
/// scribbles, picks the one with the smaller partial cross-entropy (student
/// on ties), and diffuses the winner into a pseudo-label map. Pure selector:
/// no gradient state is built here.
template <typename T>
CompetitionOutcome<T> select(const ProbabilityMap<T>& p_student, const ProbabilityMap<T>& p_teacher,
                             const ScribbleMask& s, double tau) {
  if (p_student.num_pixels != p_teacher.num_pixels || p_student.num_classes != p_teacher.num_classes) {
    throw StructuralError("select: student/teacher prediction domains differ");
  }
  CompetitionOutcome<T> out;
  out.loss_student = partial_cross_entropy(p_student, s);
  out.loss_teacher = partial_cross_entropy(p_teacher, s);
  out.winner = (out.loss_student <= out.loss_teacher) ? Network::kStudent : Network::kTeacher;
  const ProbabilityMap<T>& winning = (out.winner == Network::kStudent) ? p_student : p_teacher;
  out.pseudo_labels = rpd_from_probabilities(winning, tau);
  return out;
}

}  // namespace scribblevs
