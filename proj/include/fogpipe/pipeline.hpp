#ifndef FOGPIPE_PIPELINE_HPP_
#define FOGPIPE_PIPELINE_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "fogpipe/config.hpp"

namespace fogpipe {

struct RunSummary {
  uint64_t feed_lines = 0;  // dispatched records (comments and blanks excluded)
  uint64_t malformed = 0;
  uint64_t tuples_in = 0;  // parsed tuples entering the cleaning steps
  uint64_t clean_out = 0;
  uint64_t duplicates_removed = 0;
  uint64_t missing_attribute_rejects = 0;
  uint64_t wrong_value_rejects = 0;
  uint64_t late_drops = 0;
  uint64_t batches = 0;
  uint64_t snapshots = 0;

  uint64_t rejected() const {
    return duplicates_removed + missing_attribute_rejects + wrong_value_rejects;
  }
  std::string to_line() const;
};

// Deterministic shard assignment for a vehicle id (FNV-1a).
size_t shard_for_vehicle(std::string_view vehicle_id, size_t shards);

// Runs the full topology once: N edge nodes in parallel, a deterministic
// round-robin merge into one fabric, and one graph store writing snapshots.
// Writes per-edge cleaning reports and fabric metrics under
// <out_dir>/reports and snapshots under <out_dir>/snapshots.
RunSummary run_pipeline(const PipelineConfig& cfg);

}  // namespace fogpipe

#endif  // FOGPIPE_PIPELINE_HPP_
