#include "tractflow/geodata/flows.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "tractflow/error.hpp"
#include "tractflow/geodata/graph.hpp"
#include "tractflow/numeric/random.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val" || name == "validation") return Split::Val;
  if (name == "test") return Split::Test;
  throw Error(Errc::InvalidArgument, "unknown split '" + std::string(name) + "' (expected train, val or test)");
}

FlowTable::FlowTable(std::vector<FlowRecord> records) : records_(std::move(records)) {
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (const auto& r : records_) {
    if (!seen.emplace(r.origin, r.destination).second) {
      throw Error(Errc::DuplicatePair, r.origin + " -> " + r.destination);
    }
    if (r.commuters < 0) throw Error(Errc::NonFiniteValue, "negative commuters for " + r.origin + " -> " + r.destination);
  }
}

std::vector<FlowRecord> FlowTable::in_split(Split s) const {
  std::vector<FlowRecord> out;
  for (const auto& r : records_) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

std::array<std::size_t, 3> FlowTable::split_counts() const {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (const auto& r : records_) ++c[static_cast<std::size_t>(r.split)];
  return c;
}

void FlowTable::validate_against(const TractGraph& graph) const {
  for (const auto& r : records_) {
    graph.require_index(r.origin);
    graph.require_index(r.destination);
  }
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::InvalidArgument, "split ratios must be nonnegative and sum to 1");
  }
  const double dn = static_cast<double>(n);
  auto n_val = static_cast<std::size_t>(std::floor(dn * ratios.val + 0.5));
  auto n_test = static_cast<std::size_t>(std::floor(dn * ratios.test + 0.5));
  if (n_val + n_test > n) n_test = n - n_val;
  return {n - n_val - n_test, n_val, n_test};
}

FlowTable split_flows(std::span<const RawFlow> records, const SplitRatios& ratios, std::uint64_t seed) {
  if (records.empty()) throw Error(Errc::EmptyInput, "no flow records to split");
  const auto sizes = split_sizes(records.size(), ratios);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));

  std::vector<Split> assigned(records.size(), Split::Train);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k < sizes[0]) {
      assigned[order[k]] = Split::Train;
    } else if (k < sizes[0] + sizes[1]) {
      assigned[order[k]] = Split::Val;
    } else {
      assigned[order[k]] = Split::Test;
    }
  }
  std::vector<FlowRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(FlowRecord{records[i].origin, records[i].destination, records[i].commuters, assigned[i]});
  }
  return FlowTable(std::move(out));
}

std::vector<RawFlow> parse_flows(std::string_view text, std::string_view source) {
  const Table table = parse_table(text, source);
  if (table.columns.size() < 3) {
    throw Error(Errc::MissingColumn, std::string(source) + ": expected origin_id, dest_id, commuters");
  }
  std::vector<RawFlow> out;
  out.reserve(table.rows.size());
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const double v = parse_number(row[2], source, r + 1, table.columns[2]);
    if (v < 0.0 || v != std::floor(v)) {
      throw Error(Errc::NonFiniteValue, std::string(source) + ": row " + std::to_string(r + 1) +
                                            ": commuters must be a nonnegative integer");
    }
    if (row[0] == row[1]) {
      throw Error(Errc::InvalidArgument, std::string(source) + ": row " + std::to_string(r + 1) +
                                             ": origin equals destination (" + row[0] + ")");
    }
    if (!seen.emplace(row[0], row[1]).second) {
      throw Error(Errc::DuplicatePair, std::string(source) + ": row " + std::to_string(r + 1) + ": " + row[0] +
                                           " -> " + row[1]);
    }
    out.push_back(RawFlow{row[0], row[1], static_cast<std::int64_t>(v)});
  }
  return out;
}

std::vector<RawFlow> load_flows(const std::string& path) { return parse_flows(read_file(path), path); }

FlowTable parse_flow_table(std::string_view text, Split fallback, std::string_view source) {
  const std::vector<RawFlow> raw = parse_flows(text, source);
  const Table table = parse_table(text, source);
  const bool labelled = table.columns.size() >= 4 && table.columns[3] == "split";
  std::vector<FlowRecord> out;
  out.reserve(raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    out.push_back({raw[r].origin, raw[r].destination, raw[r].commuters,
                   labelled ? parse_split(table.rows[r][3]) : fallback});
  }
  return FlowTable(std::move(out));
}

FlowTable load_flow_table(const std::string& path, Split fallback) {
  return parse_flow_table(read_file(path), fallback, path);
}

std::string format_flows_csv(std::span<const RawFlow> flows) {
  std::string out = "origin_id,dest_id,commuters\n";
  for (const auto& f : flows) out += f.origin + ',' + f.destination + ',' + std::to_string(f.commuters) + '\n';
  return out;
}

std::string format_flow_table_csv(const FlowTable& flows) {
  std::string out = "origin_id,dest_id,commuters,split\n";
  for (const auto& f : flows.records()) {
    out += f.origin + ',' + f.destination + ',' + std::to_string(f.commuters) + ',' + std::string(to_string(f.split)) +
           '\n';
  }
  return out;
}

}  // namespace tractflow
