#pragma once

#include <string>
#include <string_view>

#include "tractflow/model/flow_model.hpp"

namespace tractflow {

inline constexpr int kCheckpointVersion = 1;

/// Self-contained JSON document: configs, normalized schema, parameter blobs
/// with shapes and init seed, the ensemble, and the base dataset (tracts,
/// edges, adjacency policy, distance provider, split-labelled flows). Contains
/// no timestamps, so equal models serialize to identical bytes.
std::string checkpoint_to_json(const TrainedModel& model);
/// Throws VersionMismatch for other format versions and ParseError on
/// malformed documents.
TrainedModel checkpoint_from_json(std::string_view text, std::string_view source = "<checkpoint>");

/// Canonical JSON of the pipeline configuration (the checkpoint's "config").
std::string pipeline_config_json(const PipelineConfig& config);

void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace tractflow
