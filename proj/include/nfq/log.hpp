#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace nfq {

// Library-wide logger ("nfq"). Warnings about questionable configurations
// (Rprop on mini-batches, lookback mismatches, gamma = 1) go here.
std::shared_ptr<spdlog::logger> logger();

}  // namespace nfq
