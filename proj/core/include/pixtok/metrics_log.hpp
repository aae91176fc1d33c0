#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pixtok {

struct MetricsRow {
  std::int64_t epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  std::optional<double> acc1;  // empty for reconstruction runs
  std::optional<double> acc5;
  double lr = 0.0;
  double seconds = 0.0;  // wall time since the run started
};

// Per-epoch rows, CSV header "epoch,split,loss,acc1,acc5,lr,seconds". When a
// path is attached each row is appended to the file as it arrives.
class MetricsLog {
 public:
  static constexpr const char* kHeader = "epoch,split,loss,acc1,acc5,lr,seconds";

  MetricsLog() = default;
  explicit MetricsLog(std::filesystem::path path);

  // Throws Error if acc5 < acc1 or the epoch goes backwards.
  void add(const MetricsRow& row);
  const std::vector<MetricsRow>& rows() const { return rows_; }
  std::vector<MetricsRow> rows_for(const std::string& split) const;
  std::optional<MetricsRow> last(const std::string& split) const;

  // Without the wall-time column the text is reproducible run to run.
  std::string to_csv(bool include_seconds = true) const;
  static std::string format_row(const MetricsRow& row, bool include_seconds = true);
  static std::vector<MetricsRow> parse_csv(const std::string& text);

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<MetricsRow> rows_;
};

}  // namespace pixtok
