#include "nfq/artifacts.hpp"

#include <fmt/format.h>

#include "nfq/errors.hpp"
#include "nfq/nfq.hpp"

namespace nfq {

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << header << '\n';
  return out;
}

}  // namespace

RunWriter::RunWriter(std::filesystem::path root, const ExperimentConfig& config)
    : root_(std::move(root)) {
  try {
    std::filesystem::create_directories(root_ / "checkpoints");
    std::filesystem::create_directories(root_ / "data");
    std::filesystem::create_directories(root_ / "eval");
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(std::string("cannot create run directory: ") + e.what());
  }
  save_config(config, root_ / "config.json");
  curve_ = open_csv(root_ / "curve.csv", "episode,avg_cost_per_step,steps,terminated");
  qstats_ = open_csv(root_ / "qstats.csv", "round,epoch,qmin,qavg,qmax");
  metrics_ = open_csv(root_ / "metrics.csv", metrics_csv_header());
}

std::filesystem::path RunWriter::checkpoint_dir(int episode) const {
  return root_ / "checkpoints" / ("ep" + std::to_string(episode));
}

void RunWriter::curve(const CurvePoint& p) {
  curve_ << fmt::format("{},{},{},{}\n", p.episode, p.avg_cost, p.steps, p.terminated ? 1 : 0);
}

void RunWriter::qstats(int round, int epoch, const QStats& s) {
  qstats_ << fmt::format("{},{},{},{},{}\n", round, epoch, s.q_min, s.q_avg, s.q_max);
}

void RunWriter::metrics(int episode, const StabilityReport& report) {
  metrics_ << metrics_csv_row(episode, report) << '\n';
}

void RunWriter::checkpoint(int episode, const QFunction& qf, const CheckpointInfo& info) {
  save_checkpoint(checkpoint_dir(episode), qf, info);
}

void RunWriter::batch(const GrowingBatch& batch) { save_batch(batch, root_ / "data" / "batch.jsonl"); }

void RunWriter::eval(int episode, const TrajectoryRecord& record) {
  write_trajectory(root_ / "eval" / ("ep" + std::to_string(episode) + ".jsonl"), record);
}

void RunWriter::flush() {
  curve_.flush();
  qstats_.flush();
  metrics_.flush();
  if (!curve_ || !qstats_ || !metrics_) throw IoError("failed writing run CSV files");
}

void write_trajectory(const std::filesystem::path& path, const TrajectoryRecord& record) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << Json{{"type", "trajectory"},
              {"checkpoint", record.checkpoint},
              {"seed", record.seed},
              {"steps", record.steps()},
              {"terminated", record.terminated}}
             .dump()
      << '\n';
  for (std::size_t k = 0; k < record.steps(); ++k) {
    out << Json{{"step", k},
                {"obs", observation_to_json(record.observations[k])},
                {"action", record.actions[k]},
                {"cost", record.costs[k]}}
               .dump()
        << '\n';
  }
}

}  // namespace nfq
