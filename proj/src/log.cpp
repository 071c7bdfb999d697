#include "nfq/log.hpp"

#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace nfq {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::get("nfq");
    if (!instance) instance = spdlog::stderr_color_mt("nfq");
    instance->set_pattern("[%l] %v");
  });
  return instance;
}

}  // namespace nfq
