#include "mpm/train/train_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mpm/errors.hpp"

namespace mpm::train {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataFormatError(DataErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace

void TrainLog::append(EpochLog e) {
  if (e.epoch != static_cast<int>(epochs_.size())) {
    throw ValidationError("train log: epoch " + std::to_string(e.epoch) + " out of order");
  }
  epochs_.push_back(std::move(e));
}

std::string TrainLog::csv(bool with_timing) const {
  std::ostringstream out;
  if (with_timing) out << "# wall_seconds=" << num(wall_seconds) << '\n';
  out << "epoch,task,loss,lr,val_mpjpe_mm\n";
  for (const auto& e : epochs_) {
    const std::string val = e.val_mpjpe_mm ? num(*e.val_mpjpe_mm) : "";
    out << e.epoch << ",total," << num(e.loss) << ',' << num(e.lr) << ',' << val << '\n';
    for (const auto& [task, loss] : e.tasks) {
      out << e.epoch << ',' << task << ',' << num(loss) << ',' << num(e.lr) << ',' << val << '\n';
    }
  }
  return out.str();
}

std::string TrainLog::jsonl(bool with_timing) const {
  std::ostringstream out;
  nlohmann::json header{{"type", "header"}, {"epochs", epochs_.size()}};
  if (with_timing) header["wall_seconds"] = wall_seconds;
  out << header.dump() << '\n';
  for (const auto& e : epochs_) {
    nlohmann::json row{{"type", "epoch"}, {"epoch", e.epoch}, {"loss", e.loss}, {"lr", e.lr}};
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [task, loss] : e.tasks) tasks[task] = loss;
    row["tasks"] = tasks;
    row["val_mpjpe_mm"] = e.val_mpjpe_mm ? nlohmann::json(*e.val_mpjpe_mm) : nlohmann::json();
    out << row.dump() << '\n';
  }
  return out.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const { write_text(path, csv()); }
void TrainLog::write_jsonl(const std::filesystem::path& path) const { write_text(path, jsonl()); }

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError(DataErrorCode::kIo, "cannot read " + path.string());
  TrainLog log;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# wall_seconds=", 0) == 0) log.wall_seconds = std::stod(line.substr(15));
      continue;
    }
    if (!header) {
      if (line != "epoch,task,loss,lr,val_mpjpe_mm") {
        throw DataFormatError(DataErrorCode::kCorruptHeader, "unexpected train log header in " + path.string());
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 4) f.emplace_back();
    if (f.size() != 5) throw DataFormatError(DataErrorCode::kCorruptContainer, "malformed train log row: " + line);
    try {
      const int epoch = std::stoi(f[0]);
      if (f[1] == "total") {
        EpochLog e;
        e.epoch = epoch;
        e.loss = std::stod(f[2]);
        e.lr = std::stod(f[3]);
        if (!f[4].empty()) e.val_mpjpe_mm = std::stod(f[4]);
        log.append(std::move(e));
      } else {
        if (log.epochs_.empty() || log.epochs_.back().epoch != epoch) {
          throw DataFormatError(DataErrorCode::kCorruptContainer, "task row before its total row: " + line);
        }
        log.epochs_.back().tasks.emplace_back(f[1], std::stod(f[2]));
      }
    } catch (const std::logic_error&) {
      throw DataFormatError(DataErrorCode::kCorruptContainer, "malformed train log row: " + line);
    }
  }
  return log;
}

}  // namespace mpm::train
