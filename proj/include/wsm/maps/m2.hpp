#pragma once

// Pipelined working-set map. The first m segments are processed by the
// interface much like the batched map; operations that survive them pass a
// filter that keeps at most one operation per key in the final slab, whose
// segments run as separate actors linked by neighbour-locks and serialized on
// the filter and the front of S[m] by a chain of front-locks.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wsm/maps/common.hpp"
#include "wsm/pbuffer/pbuffer.hpp"
#include "wsm/runtime/activation.hpp"
#include "wsm/runtime/locks.hpp"

namespace wsm::maps {

struct M2Options {
  bool audit = true;            // filter size and final-slab distinctness at lock releases
  bool audit_balance = true;    // segment balance at lock releases
  bool audit_rank = false;      // rank check after every run; meant for small runs
  bool audit_segments = false;  // cross-handle audit of every segment after every run
  std::size_t first_slab = 0;   // 0: derived from p
};

struct M2Stats {
  std::uint64_t segment_runs = 0;
  std::uint64_t trapped = 0;         // operations appended to an existing filter entry
  std::uint64_t admitted = 0;        // operations given a new filter entry
  std::uint64_t finished_first = 0;  // finished inside the first slab
  std::uint64_t finished_final = 0;
  std::size_t filter_peak = 0;
  std::size_t segments_peak = 0;
  std::uint64_t audits = 0;
  std::uint64_t rank_checks = 0;
  // Steps from the first front-lock request to the last release, worst case
  // per number of front-locks taken minus one; the interface is reported apart.
  std::vector<std::uint64_t> front_delay;
  std::uint64_t interface_front_delay = 0;
};

class M2 {
 public:
  static constexpr std::size_t kMaxSegments = 12;

  M2(rt::Runtime& rt, M2Options opts = {});

  rt::Task<OpResult> call(Operation op);
  void preload(const std::vector<Operation>& inserts);

  std::size_t first_slab() const noexcept { return m_; }
  static std::size_t first_slab_for(std::size_t p);

  std::size_t size() const noexcept { return n_; }
  std::size_t segment_count() const noexcept { return l_; }
  std::size_t segment_size(std::size_t k) const { return segs_.at(k).size(); }
  std::vector<Key> segment_keys(std::size_t k) const { return segs_.at(k).keys_by_recency(); }
  std::size_t rank_of(Key k) const;
  std::size_t filter_size() const noexcept { return filter_.size(); }

  // Operations in the order they finished.
  const std::vector<LinRecord>& linearization() const noexcept { return lin_; }
  const std::vector<std::string>& audit_failures() const noexcept { return failures_; }
  const MapStats& stats() const noexcept { return stats_; }
  const M2Stats& m2_stats() const noexcept { return m2stats_; }
  const pbuf::ParallelBuffer<Request*>& buffer() const noexcept { return *buf_; }

 private:
  // An operation travelling through the final slab; the rest of its filter
  // entry stays behind.
  struct Slot {
    bool tagged = false;  // a deletion that already succeeded
  };

  struct FilterEntry {
    std::vector<Request*> reqs;
    std::vector<Operation> ops;
    Effect effect;
    std::vector<std::uint64_t> batches;
    std::optional<KeyState> start;  // state when the travelling op found the key
  };

  struct Unfinished {
    std::size_t group;
    bool tagged;
    std::optional<KeyState> start;
  };

  enum class Placed : std::uint8_t { none, front, back };

  rt::Task<bool> interface_run();
  rt::Task<bool> segment_run(std::size_t k);
  rt::Task<> acquire_front(std::size_t top);
  void release_front(std::size_t top);
  rt::Task<> restore_first(std::size_t upto);
  std::uint32_t new_entry();
  void free_entry(std::uint32_t slot);
  // Runs every op of an entry from `s`, filling results; returns the final state.
  KeyState finish_entry(std::uint32_t slot, KeyState s, std::vector<Request*>& done);
  void record(const Operation& op, const OpResult& r, std::uint64_t batch, Placed placed);

  void audit(const char* where);
  void audit_rank(const char* where);
  void fail(std::string what);
  std::uint64_t prefix_size(std::size_t k) const;
  // End of a pass when there is no final slab: misses resolve against an
  // absent key and insertions go to the back.
  void finish_without_final_slab(std::vector<Group>& groups, const std::vector<Unfinished>& active,
                                 std::uint64_t batch, Phases& ph, std::vector<Request*>& done);

  rt::Runtime& rt_;
  M2Options opts_;
  std::size_t p_;
  std::size_t m_;
  std::unique_ptr<pbuf::ParallelBuffer<Request*>> buf_;
  std::unique_ptr<rt::ActivationGate> iface_;
  FeedBuffer<Request*> feed_;

  std::array<SegmentStore, kMaxSegments> segs_;
  std::size_t l_ = 0;  // live segments S[0..l_-1]

  // final-slab machinery, indexed by segment
  std::array<tree23::BatchTree<Slot>, kMaxSegments> inbox_;
  std::array<std::unique_ptr<rt::ActivationGate>, kMaxSegments> gates_;
  std::array<std::vector<Key>, kMaxSegments> working_;  // flushed, not yet passed on
  std::array<std::size_t, kMaxSegments> deletions_{};   // tagged deletions in S[k]
  std::array<bool, kMaxSegments> running_{};
  bool iface_running_ = false;
  // nlock_[j] sits between S[m-1+j] and S[m+j]; key 1 is the left side
  std::vector<std::unique_ptr<rt::DedicatedLock>> nlock_;
  // flock_[j]: key 1 for S[m+j] (the interface shares it with S[m]), key 2
  // for the holder of flock_[j+1]
  std::vector<std::unique_ptr<rt::DedicatedLock>> flock_;

  tree23::BatchTree<std::uint32_t> filter_;
  std::vector<FilterEntry> entries_;
  std::vector<std::uint32_t> free_entries_;

  std::size_t n_ = 0;
  std::vector<LinRecord> lin_;
  std::vector<Placed> placed_;  // where lin_[i] left its key, if it stayed
  std::vector<std::string> failures_;
  MapStats stats_;
  M2Stats m2stats_;
};

}  // namespace wsm::maps
