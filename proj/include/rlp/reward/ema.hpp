#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"

#include <memory>
#include <mutex>
#include <stdexcept>

namespace rlp::reward {

using model::ParameterSet;
using model::PositionContext;

class TeacherStateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Lagged exponential-moving-average copy of the policy parameters.
///
/// Readers take a snapshot pointer and keep scoring against it; an update
/// builds the new parameter map off to the side and publishes it with a single
/// pointer swap, so a reader sees either the old or the new map in full.
class EmaTeacher {
 public:
  explicit EmaTeacher(double tau = 0.999);

  EmaTeacher(const EmaTeacher& other);
  EmaTeacher& operator=(const EmaTeacher& other);

  bool initialized() const;
  double tau() const { return tau_; }
  /// Number of recurrence updates applied after the lazy copy.
  std::uint64_t updates() const;

  /// Current parameters; throws if the teacher has not been initialized.
  std::shared_ptr<const ParameterSet> snapshot() const;

  /// First call copies theta exactly; later calls apply
  /// phi <- tau * phi + (1 - tau) * theta. Non-finite theta is rejected and
  /// the teacher is left unchanged.
  void update(const ParameterSet& current);

  /// Installs a serialized teacher state.
  void restore(ParameterSet phi, std::uint64_t updates);

 private:
  double tau_;
  mutable std::mutex mutex_;
  std::shared_ptr<const ParameterSet> phi_;
  std::uint64_t updates_ = 0;
};

/// Functional form of EmaTeacher::update.
EmaTeacher ema_update(const EmaTeacher& teacher, const ParameterSet& current);

/// log pbar_phi(x_t | x_<t) on the bare prefix. Inference only, so it never
/// contributes gradients.
double score_baseline(const EmaTeacher& teacher, const PositionContext& ctx);

}  // namespace rlp::reward
