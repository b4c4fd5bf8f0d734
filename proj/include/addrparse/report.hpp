#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "addrparse/evaluation.hpp"
#include "addrparse/training.hpp"

namespace addrparse {

using nlohmann::ordered_json;

// Report schema (format "addrparse-eval 1"):
//   {"format", "variant", "seeds": [..],
//    "countries": [{"country", "relation"?, "n", "k", "token_accuracy",
//                   "mean_sequence_accuracy", "per_seed": [..], "mean", "std"}],
//    "overall": {same fields, country "ALL"}}
ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const ordered_json& j);
std::string render_report_text(const EvalReport& report);

struct ZStatRow {
    std::string country;
    double accuracy_a = 0.0;
    double accuracy_b = 0.0;
    ZTestResult test;
};

struct ZStatReport {
    std::string variant_a;
    std::string variant_b;
    std::vector<ZStatRow> rows;  // countries present in both reports, then "ALL"
};

// Token counts are summed over seeds before testing. Positive z favors a.
ZStatReport compare_reports(const EvalReport& a, const EvalReport& b);
ordered_json zstat_to_json(const ZStatReport& z);
std::string render_zstat_text(const ZStatReport& z);

// Training history schema (format "addrparse-history 1"): seed, stop_reason,
// best_epoch, best_val_loss and per-epoch {epoch, train_loss, val_loss, lr}.
// Wall time is left out so reruns produce identical files.
ordered_json history_to_json(std::uint64_t seed, const TrainHistory& history);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
void write_json_file(const std::filesystem::path& path, const ordered_json& j);
ordered_json read_json_file(const std::filesystem::path& path);

}  // namespace addrparse
