#pragma once

#include <filesystem>
#include <fstream>

#include "nfq/batch.hpp"
#include "nfq/checkpoint.hpp"
#include "nfq/config.hpp"
#include "nfq/metrics.hpp"

namespace nfq {

struct QStats;
struct CurvePoint;

// Run directory layout:
//   config.json, curve.csv, qstats.csv, metrics.csv,
//   checkpoints/ep{N}/, data/batch.jsonl, eval/ep{N}.jsonl
class RunWriter {
 public:
  RunWriter(std::filesystem::path root, const ExperimentConfig& config);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path checkpoint_dir(int episode) const;

  void curve(const CurvePoint& point);
  void qstats(int round, int epoch, const QStats& stats);
  void metrics(int episode, const StabilityReport& report);
  void checkpoint(int episode, const QFunction& qf, const CheckpointInfo& info);
  void batch(const GrowingBatch& batch);
  void eval(int episode, const TrajectoryRecord& record);
  void flush();

 private:
  std::filesystem::path root_;
  std::ofstream curve_;
  std::ofstream qstats_;
  std::ofstream metrics_;
};

void write_trajectory(const std::filesystem::path& path, const TrajectoryRecord& record);

}  // namespace nfq
