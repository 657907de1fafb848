#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsm {

using Key = std::int64_t;
using Value = std::int64_t;

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Strict weak order on keys that counts every invocation.
struct CountingLess {
  std::uint64_t* counter;
  bool operator()(Key a, Key b) const noexcept {
    ++*counter;
    return a < b;
  }
};

enum class OpKind : std::uint8_t { search, insert, erase, update };

const char* to_string(OpKind k);
OpKind parse_kind(const std::string& s);

struct Operation {
  std::uint64_t op_id = 0;
  OpKind kind = OpKind::search;
  Key key = 0;
  std::optional<Value> payload;

  Value value() const noexcept { return payload.value_or(0); }
};

// found: the key was present right before the operation; value: its value then.
struct OpResult {
  bool found = false;
  std::optional<Value> value;

  bool operator==(const OpResult&) const = default;
};

inline bool succeeded(OpKind k, const OpResult& r) { return k == OpKind::insert || r.found; }

using Batch = std::vector<Operation>;

void write_linearization(std::ostream& os, const std::vector<Operation>& ops);
std::vector<Operation> read_linearization(std::istream& is);

}  // namespace wsm
