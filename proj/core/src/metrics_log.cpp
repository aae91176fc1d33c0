#include "pixtok/metrics_log.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pixtok/error.hpp"

namespace pixtok {

namespace {

std::string number(double v) { return fmt::format("{:.9g}", v); }

}  // namespace

MetricsLog::MetricsLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::trunc);
  if (!out) throw Error("cannot write metrics log " + path_->string());
  out << kHeader << '\n';
}

void MetricsLog::add(const MetricsRow& row) {
  if (row.acc1 && row.acc5 && *row.acc5 + 1e-12 < *row.acc1) {
    throw Error("metrics row has acc5 < acc1");
  }
  if (!rows_.empty() && row.epoch < rows_.back().epoch) {
    throw Error("metrics rows must be monotone in epoch");
  }
  rows_.push_back(row);
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << format_row(row) << '\n';
  }
}

std::vector<MetricsRow> MetricsLog::rows_for(const std::string& split) const {
  std::vector<MetricsRow> out;
  for (const auto& r : rows_)
    if (r.split == split) out.push_back(r);
  return out;
}

std::optional<MetricsRow> MetricsLog::last(const std::string& split) const {
  for (auto it = rows_.rbegin(); it != rows_.rend(); ++it)
    if (it->split == split) return *it;
  return std::nullopt;
}

std::string MetricsLog::format_row(const MetricsRow& r, bool include_seconds) {
  std::string line = fmt::format("{},{},{},{},{},{}", r.epoch, r.split, number(r.loss),
                                 r.acc1 ? number(*r.acc1) : "", r.acc5 ? number(*r.acc5) : "",
                                 number(r.lr));
  if (include_seconds) line += "," + fmt::format("{:.3f}", r.seconds);
  return line;
}

std::string MetricsLog::to_csv(bool include_seconds) const {
  std::string out = include_seconds ? kHeader : "epoch,split,loss,acc1,acc5,lr";
  out += '\n';
  for (const auto& r : rows_) out += format_row(r, include_seconds) + '\n';
  return out;
}

std::vector<MetricsRow> MetricsLog::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw FormatError("metrics CSV header mismatch", 1);
  std::vector<MetricsRow> rows;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) throw FormatError("metrics CSV row needs 7 fields", line_no);
    try {
      MetricsRow r;
      r.epoch = std::stoll(cells[0]);
      r.split = cells[1];
      r.loss = std::stod(cells[2]);
      if (!cells[3].empty()) r.acc1 = std::stod(cells[3]);
      if (!cells[4].empty()) r.acc5 = std::stod(cells[4]);
      r.lr = std::stod(cells[5]);
      r.seconds = std::stod(cells[6]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw FormatError("metrics CSV row has a malformed number", line_no);
    }
  }
  return rows;
}

}  // namespace pixtok
