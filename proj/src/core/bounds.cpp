#include "wsm/core/bounds.hpp"

#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace wsm {

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : t_(n + 1, 0) {}
  void add(std::size_t i, int d) {
    for (++i; i < t_.size(); i += i & (~i + 1)) t_[i] += d;
  }
  std::int64_t prefix(std::size_t i) const {  // sum over [0, i)
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += t_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> t_;
};

bool names_item(OpKind k) { return k != OpKind::erase; }

}  // namespace

Linearization annotate(const std::vector<Operation>& ops) {
  Linearization out;
  out.reserve(ops.size());
  std::map<Key, Value> m;
  Fenwick marks(ops.size());
  std::unordered_map<Key, std::size_t> last_named;  // latest search/update/insert position
  std::unordered_map<Key, std::size_t> last_op;

  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Operation& op = ops[i];
    AnnotatedOp a;
    a.op = op;
    a.size_before = m.size();
    auto it = m.find(op.key);
    a.result.found = it != m.end();
    if (a.result.found) a.result.value = it->second;
    a.success = succeeded(op.kind, a.result);

    if (names_item(op.kind)) {
      auto ln = last_named.find(op.key);
      if (ln != last_named.end()) marks.add(ln->second, -1);
      marks.add(i, +1);
      last_named[op.key] = i;
    }
    bool hit = a.result.found && (op.kind == OpKind::search || op.kind == OpKind::update);
    if (hit) {
      std::size_t from = last_op.at(op.key) + 1;
      a.rank = static_cast<std::uint64_t>(marks.prefix(i + 1) - marks.prefix(from));
    } else {
      a.rank = m.size() + 1;
    }
    last_op[op.key] = i;

    switch (op.kind) {
      case OpKind::search: break;
      case OpKind::update:
        if (a.result.found) it->second = op.value();
        break;
      case OpKind::insert: m[op.key] = op.value(); break;
      case OpKind::erase:
        if (a.result.found) m.erase(it);
        break;
    }
    out.push_back(a);
  }
  return out;
}

std::uint64_t access_rank(const std::vector<Operation>& history, std::size_t index) {
  if (index >= history.size()) throw UsageError("access_rank index out of range");
  std::map<Key, Value> m;
  for (std::size_t i = 0; i < index; ++i) {
    const Operation& op = history[i];
    if (op.kind == OpKind::insert) m[op.key] = op.value();
    else if (op.kind == OpKind::erase) m.erase(op.key);
  }
  const Operation& op = history[index];
  bool found = m.count(op.key) > 0;
  if (!found || op.kind == OpKind::insert || op.kind == OpKind::erase) return m.size() + 1;
  std::size_t j = index;
  while (history[j - 1].key != op.key) --j;  // a present key has an earlier insert
  std::unordered_set<Key> distinct;
  for (std::size_t i = j; i <= index; ++i)
    if (names_item(history[i].kind)) distinct.insert(history[i].key);
  return distinct.size();
}

nlohmann::json to_json(const BoundReport& b) {
  return {{"W_L", b.W_L}, {"IW_L", b.IW_L}, {"e_L", b.e_L}, {"N", b.N}, {"log_base", b.log_base}};
}

double working_set_sum(const Linearization& L) {
  double w = 0;
  for (const auto& a : L) w += std::log2(static_cast<double>(a.rank)) + 1.0;
  return w;
}

BoundReport working_set_bound(const std::vector<Operation>& L, std::size_t p) {
  auto ann = annotate(L);
  BoundReport r;
  r.N = L.size();
  r.W_L = working_set_sum(ann);
  for (const auto& a : ann)
    if (a.size_before < p) ++r.e_L;
  std::vector<Key> keys;
  keys.reserve(L.size());
  for (const auto& op : L) keys.push_back(op.key);
  r.IW_L = insert_working_set_bound(keys);
  return r;
}

double insert_working_set_bound(const std::vector<Key>& items) {
  std::vector<Operation> derived;
  derived.reserve(2 * items.size());
  std::unordered_set<Key> seen;
  std::uint64_t id = 0;
  for (Key k : items) {
    derived.push_back({id++, OpKind::search, k, std::nullopt});
    if (seen.insert(k).second) derived.push_back({id++, OpKind::insert, k, Value{0}});
  }
  return working_set_sum(annotate(derived));
}

std::vector<OpResult> oracle_replay(const std::vector<Operation>& L) {
  std::map<Key, Value> m;
  std::vector<OpResult> out;
  out.reserve(L.size());
  for (const auto& op : L) {
    OpResult r;
    auto it = m.find(op.key);
    if (it != m.end()) {
      r.found = true;
      r.value = it->second;
    }
    switch (op.kind) {
      case OpKind::search: break;
      case OpKind::update:
        if (r.found) it->second = op.value();
        break;
      case OpKind::insert: m[op.key] = op.value(); break;
      case OpKind::erase:
        if (r.found) m.erase(it);
        break;
    }
    out.push_back(r);
  }
  return out;
}

bool validate_batch_preserving(const std::vector<Batch>& batches, const std::vector<Operation>& L) {
  struct Where {
    std::size_t batch;
    std::size_t pos;
  };
  std::unordered_map<std::uint64_t, Where> where;
  for (std::size_t b = 0; b < batches.size(); ++b)
    for (std::size_t i = 0; i < batches[b].size(); ++i)
      if (!where.emplace(batches[b][i].op_id, Where{b, i}).second)
        throw UsageError("duplicate op_id " + std::to_string(batches[b][i].op_id) + " in batches");
  if (where.size() != L.size()) throw UsageError("linearization and batches differ in size");

  std::unordered_set<std::uint64_t> used;
  std::size_t cur_batch = 0;
  std::unordered_map<Key, std::size_t> last_pos;  // within the current batch
  bool ok = true;
  for (const auto& op : L) {
    auto w = where.find(op.op_id);
    if (w == where.end()) throw UsageError("op_id " + std::to_string(op.op_id) + " not in any batch");
    if (!used.insert(op.op_id).second)
      throw UsageError("op_id " + std::to_string(op.op_id) + " appears twice");
    const Where& at = w->second;
    if (at.batch < cur_batch) ok = false;
    if (at.batch > cur_batch) {
      cur_batch = at.batch;
      last_pos.clear();
    }
    if (at.batch == cur_batch) {
      auto lp = last_pos.find(op.key);
      if (lp != last_pos.end() && lp->second > at.pos) ok = false;
      last_pos[op.key] = at.pos;
    }
  }
  return ok;
}

}  // namespace wsm
