#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "semtransfer/matrix.hpp"
#include "semtransfer/propagate.hpp"
#include "semtransfer/split.hpp"
#include "semtransfer/synth.hpp"

namespace semtransfer::cli {

/// Every key a run config may contain, with its default value.
nlohmann::ordered_json default_run_config();

/// Reads the config, merges it over the defaults (unknown keys and type
/// mismatches are ParseErrors), applies "dotted.key=value" overrides and
/// resolves relative paths against the config file's directory.
nlohmann::ordered_json load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// Same, from an in-memory document; paths resolve against `base_dir`.
nlohmann::ordered_json resolve_run_config(const nlohmann::json& user, const std::vector<std::string>& overrides,
                                          const std::filesystem::path& base_dir);

struct PipelineResult {
  nlohmann::ordered_json report;
  bool converged = true;
  std::vector<std::string> warnings;
};

/// Runs data -> mine -> binarize -> train -> score -> transfer -> propagation
/// -> evaluate, writing every intermediate to the output directory. Errors
/// keep their type and gain a "<stage>: " prefix.
PipelineResult run_pipeline(const nlohmann::ordered_json& config);

SynthConfig synth_config_from_json(const nlohmann::json& j);
PropagationConfig propagation_config_from_json(const nlohmann::json& j);

/// {"categories": [...], "attributes": [...]}; either list may be absent.
struct Terms {
  std::vector<std::string> categories;
  std::vector<std::string> attributes;
};
Terms read_terms(const std::filesystem::path& path);
void write_terms(const std::filesystem::path& path, const Terms& terms);

/// "<TAB>prediction" header then instance<TAB>category rows.
void write_predictions(const std::filesystem::path& path, const Registry& instances, const Registry& categories,
                       const std::vector<std::size_t>& predicted);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace semtransfer::cli
