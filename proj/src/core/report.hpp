#pragma once

#include <string>

#include <json.hpp>

#include "core/propagate.hpp"
#include "core/subspace.hpp"

namespace nnas {

nlohmann::json to_json(const OutputStats& stats);
nlohmann::json to_json(const PolySurface& surface);
nlohmann::json config_to_json(const PropagationConfig& cfg, const NoiseModel& nm);

// The report.json document: resolved config, seed, spectrum summary,
// subspace, surface diagnostics, statistics and costs.
nlohmann::json report_to_json(const PropagationReport& report);

// The compare.json document: both statistics blocks, relative errors and
// both cost ratios.
nlohmann::json compare_to_json(const PropagationReport& report);

nlohmann::json adversarial_to_json(const AdversarialResult& result, const QoISpec& spec,
                                   const PropagationConfig& cfg, const NoiseModel& nm);

// Writers place the named files in out_dir (created if missing):
//   analysis:    report.json, spectrum.csv, eigenvectors.csv, summary.csv,
//                fitted_curve.csv, histogram.csv, surface.json
//   comparison:  compare.json
//   adversarial: adversarial.json, original.csv, perturbed.csv
//   attribution: attribution.csv, attribution.json
void write_analysis_artifacts(const PropagationReport& report, const std::string& out_dir);
void write_compare_artifacts(const PropagationReport& report, const std::string& out_dir);
void write_adversarial_artifacts(const AdversarialResult& result, const QoISpec& spec,
                                 const PropagationConfig& cfg, const NoiseModel& nm,
                                 const std::string& out_dir);
void write_attribution_artifacts(const Vec& scores, std::size_t rank_used,
                                 const PropagationConfig& cfg, const QoISpec& spec,
                                 const std::string& out_dir);

void write_json_file(const nlohmann::json& doc, const std::string& path);
void ensure_directory(const std::string& path);

} // namespace nnas
