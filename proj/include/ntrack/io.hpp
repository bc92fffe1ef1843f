#pragma once

#include "ntrack/evaluation.hpp"
#include "ntrack/stats.hpp"
#include "ntrack/trf.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ntrack::io {

namespace fs = std::filesystem;

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

// CTTS: "CTTS", u32 version, f64 rate, u32 channels, u64 samples, then per
// label u16 length + bytes, then channel-major f32 samples. All little-endian.
std::string encode_ctts(const TimeSeries& ts);
TimeSeries decode_ctts(const std::string& bytes, const std::string& what = "buffer");
void write_ctts(const fs::path& path, const TimeSeries& ts);
TimeSeries read_ctts(const fs::path& path);

/// Single-channel CTTS whose label is "<kind>:<source_id>".
void write_feature(const fs::path& path, const FeatureSeries& f);
FeatureSeries read_feature(const fs::path& path);

/// First row holds the labels, one row per sample after that.
TimeSeries read_csv(const fs::path& path, double rate);

/// RIFF/WAVE with PCM 16/24/32-bit or 32-bit float samples.
TimeSeries read_wav(const fs::path& path);
void write_wav16(const fs::path& path, const TimeSeries& ts);

// CTRF: "CTRF", u32 version, f64 rate, f64 t_min, f64 t_max, u8 direction,
// f64 basis width (0 = identity), u32 channels, u32 lags, u32 basis size,
// label table, f32 h (channels x lags), f32 weights (channels x basis).
// On read h is rebuilt from the weights.
std::string encode_ctrf(const TRFKernel& k);
TRFKernel decode_ctrf(const std::string& bytes, const std::string& what = "buffer");
void write_ctrf(const fs::path& path, const TRFKernel& k);
TRFKernel read_ctrf(const fs::path& path);

/// A directory of CTTS files plus manifest.json.
struct BundleTrial {
    TrialRecord record;
    std::uint64_t seed = 0;
};

struct Bundle {
    std::vector<BundleTrial> trials;
    std::string metadata_json = "{}";  // free-form, stored under "metadata"

    std::vector<TrialRecord> records() const;
};

void write_bundle(const fs::path& dir, const Bundle& bundle);
/// Throws MissingInputs listing every absent file.
Bundle read_bundle(const fs::path& dir);

// Tidy result tables.
std::string correlations_csv(const std::vector<CorrelationResult>& results);
std::string scan_csv(const std::vector<ScanCurve>& curves);
std::string classification_csv(const std::vector<ClassificationResult>& results);
std::string classification_summary_csv(const std::vector<ClassificationResult>& results);
std::string stat_json(const StatResult& res);
std::string stat_csv(const StatResult& res);

}  // namespace ntrack::io
