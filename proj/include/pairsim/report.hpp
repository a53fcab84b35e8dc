#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "pairsim/analysis.hpp"
#include "pairsim/config.hpp"
#include "pairsim/physics.hpp"
#include "pairsim/pipeline.hpp"

namespace pairsim {

inline constexpr const char* kVersion = "0.1.0";

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string version = kVersion;
};

nlohmann::ordered_json to_json(const SourceConfig& c);
nlohmann::ordered_json to_json(const DerivedQuantities& dq);
nlohmann::ordered_json to_json(const SpectralMetrics& m);
nlohmann::ordered_json to_json(const RateSummary& s);
nlohmann::ordered_json to_json(const TriangleFit& f);
nlohmann::ordered_json to_json(const HomScanResult& r);
nlohmann::ordered_json to_json(const Provenance& p);

// Writes `j` with a single volatile "generated_at" field injected at the top
// level; everything else is byte-reproducible.
void write_json_report(const std::string& path, nlohmann::ordered_json j);

// CSV writers. The first line is a "# generated ..." comment; all other
// lines are deterministic.
void write_histogram_csv(const std::string& path, const Histogram& hist);
void write_scan_csv(const std::string& path, const HomScanResult& scan);

// Parses a scan CSV (as written by write_scan_csv, extra columns ignored).
// Throws ValidationError with a row number on malformed input.
std::vector<ScanPoint> read_scan_csv(const std::string& path);

}  // namespace pairsim
