#include "wsm/core/effect.hpp"

namespace wsm {

Effect effect_of(const Operation& op) {
  Effect e;
  switch (op.kind) {
    case OpKind::search:
      break;
    case OpKind::update:
      e.if_present = Effect::IfPresent::set;
      e.present_value = op.value();
      break;
    case OpKind::insert:
      e.if_present = Effect::IfPresent::set;
      e.present_value = op.value();
      e.if_absent = Effect::IfAbsent::insert;
      e.absent_value = op.value();
      break;
    case OpKind::erase:
      e.if_present = Effect::IfPresent::remove;
      break;
  }
  return e;
}

Effect compose(const Effect& first, const Effect& then) {
  using P = Effect::IfPresent;
  using A = Effect::IfAbsent;
  Effect r;
  // started present
  if (first.if_present == P::remove) {
    if (then.if_absent == A::insert) {
      r.if_present = P::set;
      r.present_value = then.absent_value;
    } else {
      r.if_present = P::remove;
    }
  } else {
    switch (then.if_present) {
      case P::keep:
        r.if_present = first.if_present;
        r.present_value = first.present_value;
        break;
      case P::set:
        r.if_present = P::set;
        r.present_value = then.present_value;
        break;
      case P::remove:
        r.if_present = P::remove;
        break;
    }
  }
  // started absent
  if (first.if_absent == A::stay) {
    r.if_absent = then.if_absent;
    r.absent_value = then.absent_value;
  } else {
    switch (then.if_present) {
      case P::keep:
        r.if_absent = A::insert;
        r.absent_value = first.absent_value;
        break;
      case P::set:
        r.if_absent = A::insert;
        r.absent_value = then.present_value;
        break;
      case P::remove:
        r.if_absent = A::stay;
        break;
    }
  }
  return r;
}

Effect effect_of(const std::vector<Operation>& ops) {
  Effect e;
  for (const auto& op : ops) e = compose(e, effect_of(op));
  return e;
}

KeyState apply(const Effect& e, KeyState s) {
  if (s.present) {
    switch (e.if_present) {
      case Effect::IfPresent::keep: return s;
      case Effect::IfPresent::set: return {true, e.present_value};
      case Effect::IfPresent::remove: return {false, 0};
    }
  }
  if (e.if_absent == Effect::IfAbsent::insert) return {true, e.absent_value};
  return {false, 0};
}

OpResult apply_op(KeyState& s, const Operation& op) {
  OpResult r;
  r.found = s.present;
  if (s.present) r.value = s.value;
  s = apply(effect_of(op), s);
  return r;
}

}  // namespace wsm
