#include "wsm/core/types.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace wsm {

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::search: return "search";
    case OpKind::insert: return "insert";
    case OpKind::erase: return "delete";
    case OpKind::update: return "update";
  }
  return "?";
}

OpKind parse_kind(const std::string& s) {
  if (s == "search") return OpKind::search;
  if (s == "insert") return OpKind::insert;
  if (s == "delete") return OpKind::erase;
  if (s == "update") return OpKind::update;
  throw UsageError("unknown operation kind: " + s);
}

void write_linearization(std::ostream& os, const std::vector<Operation>& ops) {
  for (const auto& op : ops) {
    os << op.op_id << ' ' << to_string(op.kind) << ' ' << op.key;
    if (op.payload) os << ' ' << *op.payload;
    os << '\n';
  }
}

std::vector<Operation> read_linearization(std::istream& is) {
  std::vector<Operation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Operation op;
    std::string kind;
    if (!(ls >> op.op_id >> kind >> op.key))
      throw UsageError("malformed linearization line " + std::to_string(lineno));
    op.kind = parse_kind(kind);
    Value v;
    if (ls >> v) op.payload = v;
    out.push_back(op);
  }
  return out;
}

}  // namespace wsm
