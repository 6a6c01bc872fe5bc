#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pentrap/config.hpp"

namespace pentrap {

enum class StudyKind {
  SnapshotHistogram,
  FluctuationSurface,
  SupportCorrelation,
  PsdBroadening,
  VkComparison,
  OdfScan,
  ShoAppendix,
};

std::optional<StudyKind> study_from_name(const std::string& name);
const std::vector<std::string>& study_names();

struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string expectation;
  bool pass = false;
};

struct StudyOutcome {
  std::string study;
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

/**
 * Runs one study end to end: builds the system, generates the required
 * ensembles, writes CSV/JSON artifacts plus a machine-readable summary.json
 * under <cfg.out_dir>/<study-name>/ and returns the executed checks.
 * Fully determined by (cfg, cfg.seed): identical inputs reproduce identical
 * output bytes.
 */
StudyOutcome run_study(StudyKind kind, const RunConfig& cfg);

// Peak locations of a spectrum-like series: local maxima with at least
// `min_ratio` prominence over the surrounding valleys, restricted to
// [f_min, f_max]. Shared by the spectrum-shape checks and the CLI.
struct SpectrumPeak {
  double frequency_hz = 0.0;
  double value = 0.0;
};

std::vector<SpectrumPeak> find_peaks(const std::vector<double>& frequency_hz,
                                     const std::vector<double>& values,
                                     double f_min, double f_max, double min_ratio);

}  // namespace pentrap
