#pragma once

// Batched working-set map. Calls go through a parallel buffer; each cycle
// flushes it into a feed buffer of p^2-bunches, cuts a batch, sorts and
// combines it by key, and passes the key groups through the segments once.

#include <memory>
#include <string>
#include <vector>

#include "wsm/maps/common.hpp"
#include "wsm/pbuffer/pbuffer.hpp"
#include "wsm/runtime/activation.hpp"

namespace wsm::maps {

struct M1Options {
  bool audit_segments = false;  // full cross-handle audit after every batch
};

class M1 {
 public:
  M1(rt::Runtime& rt, M1Options opts = {});

  // From a program thread: submit through the buffer and wait for the result.
  rt::Task<OpResult> call(Operation op);

  // Inserts distinct absent keys directly, outside the simulator, in the
  // order a run of single inserts would leave them.
  void preload(const std::vector<Operation>& inserts);

  std::size_t size() const noexcept { return n_; }
  std::size_t segment_count() const noexcept { return segs_.size(); }
  std::size_t segment_size(std::size_t k) const { return segs_.at(k).size(); }
  std::vector<Key> segment_keys(std::size_t k) const { return segs_.at(k).keys_by_recency(); }
  // Position in segment order, then recency order; 1-based.
  std::size_t rank_of(Key k) const;

  const std::vector<LinRecord>& linearization() const noexcept { return lin_; }
  // Cut batches in processing order (preloads first, as one batch).
  const std::vector<Batch>& batches() const noexcept { return batches_; }
  const std::vector<std::string>& audit_failures() const noexcept { return failures_; }
  const MapStats& stats() const noexcept { return stats_; }
  const pbuf::ParallelBuffer<Request*>& buffer() const noexcept { return *buf_; }

  // Number of bunches a cut batch takes for a map of size n.
  static std::size_t bunches_for(std::size_t n, std::size_t p);

 private:
  rt::Task<bool> cycle();
  rt::Task<> process(std::vector<Request*> cut);
  rt::Task<> restore(std::size_t upto);
  void audit_capacity();
  void record(const std::vector<Group>& groups);

  rt::Runtime& rt_;
  M1Options opts_;
  std::size_t p_;
  std::unique_ptr<pbuf::ParallelBuffer<Request*>> buf_;
  std::unique_ptr<rt::ActivationGate> gate_;
  FeedBuffer<Request*> feed_;
  std::vector<SegmentStore> segs_;
  std::size_t n_ = 0;
  std::vector<LinRecord> lin_;
  std::vector<Batch> batches_;
  std::vector<std::string> failures_;
  MapStats stats_;
};

}  // namespace wsm::maps
