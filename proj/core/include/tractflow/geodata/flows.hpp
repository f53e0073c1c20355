#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tractflow {

class TractGraph;

enum class Split { Train, Val, Test };

std::string_view to_string(Split s) noexcept;
/// Accepts train, val/validation, test. Throws InvalidArgument otherwise.
Split parse_split(std::string_view name);

/// One origin-destination observation before splitting.
struct RawFlow {
  std::string origin;
  std::string destination;
  std::int64_t commuters = 0;

  friend bool operator==(const RawFlow&, const RawFlow&) = default;
};

struct FlowRecord {
  std::string origin;
  std::string destination;
  std::int64_t commuters = 0;
  Split split = Split::Train;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Origin-destination commuter counts with their dataset split.
class FlowTable {
 public:
  FlowTable() = default;
  /// Throws DuplicatePair when an (origin, destination) pair repeats.
  explicit FlowTable(std::vector<FlowRecord> records);

  std::span<const FlowRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::vector<FlowRecord> in_split(Split s) const;
  std::array<std::size_t, 3> split_counts() const;

  /// Throws UnknownTract when an id does not resolve in the graph.
  void validate_against(const TractGraph& graph) const;

  friend bool operator==(const FlowTable&, const FlowTable&) = default;

 private:
  std::vector<FlowRecord> records_;
};

/// Class sizes for n records: val and test are rounded to nearest, train
/// takes the remainder.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Seeded shuffle then assignment of whole OD pairs to train/val/test.
FlowTable split_flows(std::span<const RawFlow> records, const SplitRatios& ratios, std::uint64_t seed);

/// Reads a 3-column table (origin_id, dest_id, commuters). Commuters must be
/// nonnegative integers; self pairs and repeated pairs are rejected.
std::vector<RawFlow> load_flows(const std::string& path);
std::vector<RawFlow> parse_flows(std::string_view text, std::string_view source = "<memory>");

/// Flow table with a fourth "split" column. Without that column every record
/// is labelled `fallback`.
FlowTable parse_flow_table(std::string_view text, Split fallback, std::string_view source = "<memory>");
FlowTable load_flow_table(const std::string& path, Split fallback);

/// "origin_id,dest_id,commuters".
std::string format_flows_csv(std::span<const RawFlow> flows);
/// "origin_id,dest_id,commuters,split".
std::string format_flow_table_csv(const FlowTable& flows);

}  // namespace tractflow
