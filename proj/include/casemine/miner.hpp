#ifndef CASEMINE_MINER_HPP
#define CASEMINE_MINER_HPP

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace casemine {

using ItemId = std::uint32_t;

/// Horizontal transaction database: each transaction is a sorted set of item ids.
class TransactionDb {
 public:
  /// `items` must be sorted and free of duplicates.
  void add(std::span<const ItemId> items);
  void reserve(std::size_t transactions, std::size_t items);

  std::size_t size() const { return offsets_.size() - 1; }
  bool empty() const { return size() == 0; }
  std::span<const ItemId> operator[](std::size_t t) const {
    return {items_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
  }
  /// One past the largest item id seen.
  ItemId item_bound() const { return bound_; }
  std::size_t total_items() const { return items_.size(); }

 private:
  std::vector<ItemId> items_;
  std::vector<std::size_t> offsets_{0};
  ItemId bound_ = 0;
};

struct MiningParams {
  double sigma = 0.0;  // minimum support, fraction in [0, 1]
  std::optional<std::size_t> max_itemsets;  // result cap; exceeding it is BudgetExceeded
  std::optional<double> time_budget_seconds;
  unsigned threads = 1;
  const std::atomic<bool>* cancel = nullptr;  // set to true to abort with Interrupted
  /// Called with the running count of closed candidates, every 1000 candidates.
  /// May be invoked from worker threads.
  std::function<void(std::size_t)> on_progress;
};

struct ClosedItemset {
  std::vector<ItemId> items;  // sorted
  std::size_t support_count = 0;
  double support = 0.0;
  friend bool operator==(const ClosedItemset&, const ClosedItemset&) = default;
};

/// Smallest count c with c / n >= sigma (sigma taken as a decimal, so values
/// within 1e-9 relative of an integer boundary count as on it).
std::size_t min_support_count(double sigma, std::size_t n);

/// All frequent closed itemsets. The empty itemset is included when it is
/// closed, i.e. when no item occurs in every transaction.
/// Output order: support descending, then items lexicographically.
/// Throws EmptyDatabase, BudgetExceeded, Interrupted, MiningError (bad sigma).
std::vector<ClosedItemset> mine_fcis(const TransactionDb& db, const MiningParams& params);

std::size_t support_count_of(const TransactionDb& db, std::span<const ItemId> items);
/// Fraction of transactions containing `items` (1.0 for the empty itemset).
double support_of(const TransactionDb& db, std::span<const ItemId> items);
/// Intersection of every transaction containing `items`. Throws MiningError on zero support.
std::vector<ItemId> closure_of(const TransactionDb& db, std::span<const ItemId> items);

}  // namespace casemine

#endif  // CASEMINE_MINER_HPP
