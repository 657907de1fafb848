#pragma once

#include <vector>

#include "wsm/core/types.hpp"

namespace wsm {

struct KeyState {
  bool present = false;
  Value value = 0;

  bool operator==(const KeyState&) const = default;
};

// Net effect of a run of operations on a single key, split by whether the key
// was present beforehand.
struct Effect {
  enum class IfPresent : std::uint8_t { keep, set, remove };
  enum class IfAbsent : std::uint8_t { stay, insert };

  IfPresent if_present = IfPresent::keep;
  Value present_value = 0;
  IfAbsent if_absent = IfAbsent::stay;
  Value absent_value = 0;

  bool operator==(const Effect&) const = default;
};

Effect effect_of(const Operation& op);
// Effect of running `first` and then `then`.
Effect compose(const Effect& first, const Effect& then);
Effect effect_of(const std::vector<Operation>& ops);
KeyState apply(const Effect& e, KeyState s);

// Runs one operation against a single-key state.
OpResult apply_op(KeyState& s, const Operation& op);

}  // namespace wsm
