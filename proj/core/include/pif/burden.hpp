#pragma once

#include <map>
#include <mutex>
#include <string>

namespace pif {

/// Counts learner trainings per method label; the cost metric for every PI
/// method. Incremented exactly once per fit, through a serialized counter.
class BurdenLedger {
 public:
  void record(const std::string& method, long count = 1) {
    std::lock_guard lock(mutex_);
    counts_[method] += count;
  }

  long trainings(const std::string& method) const {
    std::lock_guard lock(mutex_);
    auto it = counts_.find(method);
    return it == counts_.end() ? 0 : it->second;
  }

  std::map<std::string, long> snapshot() const {
    std::lock_guard lock(mutex_);
    return counts_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, long> counts_;
};

/// Nullable handle passed into PI constructors; a default Burden disables
/// accounting.
struct Burden {
  BurdenLedger* ledger = nullptr;
  std::string key;

  void add(long count = 1) const {
    if (ledger != nullptr) ledger->record(key, count);
  }
};

}  // namespace pif
