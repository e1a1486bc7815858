#include "rlp/reward/ema.hpp"

#include "rlp/model/inference.hpp"

namespace rlp::reward {

EmaTeacher::EmaTeacher(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("EMA decay tau must lie in (0, 1)");
}

EmaTeacher::EmaTeacher(const EmaTeacher& other) : tau_(other.tau_) {
  std::lock_guard lock(other.mutex_);
  phi_ = other.phi_;
  updates_ = other.updates_;
}

EmaTeacher& EmaTeacher::operator=(const EmaTeacher& other) {
  if (this == &other) return *this;
  std::shared_ptr<const ParameterSet> phi;
  std::uint64_t updates = 0;
  {
    std::lock_guard lock(other.mutex_);
    phi = other.phi_;
    updates = other.updates_;
  }
  std::lock_guard lock(mutex_);
  tau_ = other.tau_;
  phi_ = std::move(phi);
  updates_ = updates;
  return *this;
}

bool EmaTeacher::initialized() const {
  std::lock_guard lock(mutex_);
  return phi_ != nullptr;
}

std::uint64_t EmaTeacher::updates() const {
  std::lock_guard lock(mutex_);
  return updates_;
}

std::shared_ptr<const ParameterSet> EmaTeacher::snapshot() const {
  std::lock_guard lock(mutex_);
  if (!phi_) throw TeacherStateError("EMA teacher used before initialization");
  return phi_;
}

void EmaTeacher::update(const ParameterSet& current) {
  if (!current.finite()) throw numerics::NonFiniteError("EMA update rejected: current parameters are not finite");
  std::shared_ptr<const ParameterSet> old;
  {
    std::lock_guard lock(mutex_);
    old = phi_;
  }
  std::shared_ptr<ParameterSet> next;
  if (!old) {
    next = std::make_shared<ParameterSet>(current);
  } else {
    if (!(old->config() == current.config())) throw TeacherStateError("EMA update with a different model config");
    next = std::make_shared<ParameterSet>(*old);
    for (auto& [name, t] : next->tensors()) {
      t.values() = tau_ * t.values() + (1.0 - tau_) * current.values(name);
    }
  }
  next->set_version(current.version());
  std::lock_guard lock(mutex_);
  if (old) ++updates_;
  phi_ = std::move(next);
}

void EmaTeacher::restore(ParameterSet phi, std::uint64_t updates) {
  auto next = std::make_shared<const ParameterSet>(std::move(phi));
  std::lock_guard lock(mutex_);
  phi_ = std::move(next);
  updates_ = updates;
}

EmaTeacher ema_update(const EmaTeacher& teacher, const ParameterSet& current) {
  EmaTeacher out(teacher);
  out.update(current);
  return out;
}

double score_baseline(const EmaTeacher& teacher, const PositionContext& ctx) {
  const auto phi = teacher.snapshot();
  return model::score_next_token(*phi, ctx.prefix, ctx.target);
}

}  // namespace rlp::reward
