#include "casemine/miner.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "casemine/error.hpp"

namespace casemine {

void TransactionDb::add(std::span<const ItemId> items) {
  items_.insert(items_.end(), items.begin(), items.end());
  offsets_.push_back(items_.size());
  if (!items.empty()) bound_ = std::max(bound_, items.back() + 1);
}

void TransactionDb::reserve(std::size_t transactions, std::size_t items) {
  offsets_.reserve(transactions + 1);
  items_.reserve(items);
}

std::size_t min_support_count(double sigma, std::size_t n) {
  const double target = sigma * static_cast<double>(n);
  const double eps = 1e-9 * std::max(1.0, target);
  const double c = std::ceil(target - eps);
  if (c <= 0.0) return 0;
  return std::min(n, static_cast<std::size_t>(c));
}

std::size_t support_count_of(const TransactionDb& db, std::span<const ItemId> items) {
  std::size_t n = 0;
  for (std::size_t t = 0; t < db.size(); ++t) {
    const auto row = db[t];
    if (std::includes(row.begin(), row.end(), items.begin(), items.end())) ++n;
  }
  return n;
}

double support_of(const TransactionDb& db, std::span<const ItemId> items) {
  if (db.empty()) return items.empty() ? 1.0 : 0.0;
  return static_cast<double>(support_count_of(db, items)) / static_cast<double>(db.size());
}

std::vector<ItemId> closure_of(const TransactionDb& db, std::span<const ItemId> items) {
  std::optional<std::vector<ItemId>> acc;
  for (std::size_t t = 0; t < db.size(); ++t) {
    const auto row = db[t];
    if (!std::includes(row.begin(), row.end(), items.begin(), items.end())) continue;
    if (!acc) {
      acc.emplace(row.begin(), row.end());
    } else {
      std::vector<ItemId> next;
      std::set_intersection(acc->begin(), acc->end(), row.begin(), row.end(), std::back_inserter(next));
      acc = std::move(next);
    }
  }
  if (!acc) throw MiningError("closure of an itemset with zero support");
  return *acc;
}

namespace {

using Word = std::uint64_t;

struct Tidset {
  std::vector<Word> words;
  std::size_t count = 0;
};

std::size_t and_count(const Tidset& a, const Tidset& b) {
  std::size_t n = 0;
  const Word* pa = a.words.data();
  const Word* pb = b.words.data();
  for (std::size_t i = 0, e = a.words.size(); i < e; ++i) n += static_cast<std::size_t>(std::popcount(pa[i] & pb[i]));
  return n;
}

Tidset and_of(const Tidset& a, const Tidset& b, std::size_t count) {
  Tidset out;
  out.words.resize(a.words.size());
  for (std::size_t i = 0; i < a.words.size(); ++i) out.words[i] = a.words[i] & b.words[i];
  out.count = count;
  return out;
}

std::uint64_t tid_hash(const Tidset& t) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < t.words.size(); ++i) {
    if (!t.words[i]) continue;
    h ^= t.words[i] + 0x9e3779b97f4a7c15ull + (i << 7);
    h *= 0x100000001b3ull;
    h ^= h >> 29;
  }
  return h;
}

struct Node {
  std::vector<ItemId> items;
  Tidset tids;
};

struct Candidate {
  std::vector<ItemId> items;
  std::size_t count = 0;
  std::uint64_t hash = 0;
};

void union_into(std::vector<ItemId>& dst, const std::vector<ItemId>& src) {
  std::vector<ItemId> out;
  out.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
  dst = std::move(out);
}

/// Closed-candidate store keyed by (support, tidset hash). A candidate is
/// rejected when a stored itemset with the same key contains it: same support
/// and superset implies same tidset.
class ClosedStore {
 public:
  bool insert(Candidate c) {
    auto& bucket = buckets_[{c.count, c.hash}];
    for (auto idx : bucket) {
      const auto& kept = kept_[idx].items;
      if (std::includes(kept.begin(), kept.end(), c.items.begin(), c.items.end())) return false;
    }
    bucket.push_back(kept_.size());
    kept_.push_back(std::move(c));
    return true;
  }
  std::vector<Candidate>& items() { return kept_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<std::size_t, std::uint64_t>& k) const {
      return static_cast<std::size_t>(k.second ^ (k.first * 0x9e3779b97f4a7c15ull));
    }
  };
  std::unordered_map<std::pair<std::size_t, std::uint64_t>, std::vector<std::size_t>, KeyHash> buckets_;
  std::vector<Candidate> kept_;
};

class Search {
 public:
  Search(std::size_t min_count, const MiningParams& params)
      : min_count_(min_count), params_(params), start_(std::chrono::steady_clock::now()) {}

  void check() {
    if (params_.cancel && params_.cancel->load(std::memory_order_relaxed)) throw Interrupted();
    if (aborted_.load(std::memory_order_relaxed)) throw Interrupted();  // another worker failed
    if (params_.time_budget_seconds) {
      const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start_;
      if (spent.count() > *params_.time_budget_seconds) {
        throw BudgetExceeded("mining exceeded the time budget of " + std::to_string(*params_.time_budget_seconds) + " s");
      }
    }
  }

  void abort() { aborted_.store(true); }

  void emit(ClosedStore& store, std::vector<ItemId> items, const Tidset& tids) {
    if (store.insert(Candidate{std::move(items), tids.count, tid_hash(tids)})) {
      const auto n = found_.fetch_add(1) + 1;
      if (params_.on_progress && n % 1000 == 0) params_.on_progress(n);
    }
  }

  /// CHARM extension over one equivalence class; `level` is consumed.
  void extend(std::vector<Node>& level, ClosedStore& store) {
    std::vector<char> removed(level.size(), 0);
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (removed[i]) continue;
      check();
      std::vector<ItemId> x = level[i].items;
      std::vector<Node> children = expand(level, removed, i, x);
      finish(std::move(x), level[i].tids, std::move(children), store);
    }
  }

  /// Compares member i with its later siblings, growing `x` on tidset equality or
  /// inclusion and returning the child class (children hold only the sibling's items).
  std::vector<Node> expand(std::vector<Node>& level, std::vector<char>& removed, std::size_t i,
                           std::vector<ItemId>& x) {
    std::vector<Node> children;
    const Tidset& ti = level[i].tids;
    for (std::size_t j = i + 1; j < level.size(); ++j) {
      if (removed[j]) continue;
      const Tidset& tj = level[j].tids;
      const std::size_t s = and_count(ti, tj);
      if (s < min_count_) continue;
      if (s == ti.count && s == tj.count) {
        removed[j] = 1;
        union_into(x, level[j].items);
      } else if (s == ti.count) {
        union_into(x, level[j].items);
      } else {
        if (s == tj.count) removed[j] = 1;
        children.push_back(Node{level[j].items, and_of(ti, tj, s)});
      }
    }
    return children;
  }

  void finish(std::vector<ItemId> x, const Tidset& tids, std::vector<Node> children, ClosedStore& store) {
    if (!children.empty()) {
      for (auto& child : children) union_into(child.items, x);
      std::stable_sort(children.begin(), children.end(),
                       [](const Node& a, const Node& b) { return a.tids.count < b.tids.count; });
      extend(children, store);
    }
    emit(store, std::move(x), tids);
  }

 private:
  std::size_t min_count_;
  const MiningParams& params_;
  std::chrono::steady_clock::time_point start_;
  std::atomic<std::size_t> found_{0};
  std::atomic<bool> aborted_{false};
};

/// Bounded pool: at most `limit` top-level branches are in flight at once.
class BranchPool {
 public:
  BranchPool(unsigned threads, Search& search) : search_(search), limit_(threads * 2) {
    for (unsigned t = 0; t < threads; ++t) workers_.emplace_back([this] { run(); });
  }

  ~BranchPool() {
    try {
      join();
    } catch (...) {
    }
  }

  void submit(std::function<void()> job) {
    std::unique_lock lock(mu_);
    space_.wait(lock, [&] { return queue_.size() < limit_ || error_; });
    if (error_) return;
    queue_.push_back(std::move(job));
    ready_.notify_one();
  }

  /// Waits for all jobs; rethrows the first failure.
  void join() {
    {
      std::lock_guard lock(mu_);
      closing_ = true;
    }
    ready_.notify_all();
    for (auto& w : workers_) {
      if (w.joinable()) w.join();
    }
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

  bool failed() {
    std::lock_guard lock(mu_);
    return error_ != nullptr;
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        ready_.wait(lock, [&] { return !queue_.empty() || closing_; });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
        space_.notify_one();
      }
      try {
        job();
      } catch (...) {
        search_.abort();
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
        queue_.clear();
        space_.notify_all();
      }
    }
  }

  Search& search_;
  std::size_t limit_;
  std::vector<std::thread> workers_;
  std::deque<std::function<void()>> queue_;
  std::mutex mu_;
  std::condition_variable ready_;
  std::condition_variable space_;
  bool closing_ = false;
  std::exception_ptr error_;
};

}  // namespace

std::vector<ClosedItemset> mine_fcis(const TransactionDb& db, const MiningParams& params) {
  if (!(params.sigma >= 0.0 && params.sigma <= 1.0)) throw MiningError("sigma must lie in [0, 1]");
  if (db.empty()) throw EmptyDatabase();
  const std::size_t n = db.size();
  const std::size_t min_count = min_support_count(params.sigma, n);
  const std::size_t min_positive = std::max<std::size_t>(min_count, 1);
  const std::size_t words = (n + 63) / 64;

  // Vertical index.
  std::vector<Tidset> vertical(db.item_bound());
  for (auto& t : vertical) t.words.assign(words, 0);
  for (std::size_t t = 0; t < n; ++t) {
    for (ItemId item : db[t]) {
      vertical[item].words[t >> 6] |= Word{1} << (t & 63);
      ++vertical[item].count;
    }
  }

  std::vector<ItemId> present;
  std::vector<ItemId> full_support;
  std::vector<Node> top;
  for (ItemId item = 0; item < vertical.size(); ++item) {
    const auto c = vertical[item].count;
    if (c == 0) continue;
    present.push_back(item);
    if (c == n) full_support.push_back(item);
    if (c >= min_positive) top.push_back(Node{{item}, std::move(vertical[item])});
  }
  vertical.clear();
  std::stable_sort(top.begin(), top.end(), [](const Node& a, const Node& b) { return a.tids.count < b.tids.count; });

  Search search(min_positive, params);
  const unsigned threads = std::max(1u, params.threads);
  std::vector<std::unique_ptr<ClosedStore>> stores;

  {
    std::vector<char> removed(top.size(), 0);
    std::mutex stores_mu;
    const auto branch = [&](std::vector<ItemId> x, Tidset tids, std::vector<Node> children) {
      auto store = std::make_unique<ClosedStore>();
      search.finish(std::move(x), tids, std::move(children), *store);
      std::lock_guard lock(stores_mu);
      stores.push_back(std::move(store));
    };
    if (threads == 1) {
      for (std::size_t i = 0; i < top.size(); ++i) {
        if (removed[i]) continue;
        search.check();
        std::vector<ItemId> x = top[i].items;
        auto children = search.expand(top, removed, i, x);
        branch(std::move(x), top[i].tids, std::move(children));
      }
    } else {
      BranchPool pool(threads, search);
      for (std::size_t i = 0; i < top.size() && !pool.failed(); ++i) {
        if (removed[i]) continue;
        try {
          search.check();
        } catch (...) {
          search.abort();
          pool.join();
          throw;
        }
        std::vector<ItemId> x = top[i].items;
        auto children = search.expand(top, removed, i, x);
        pool.submit([&branch, x = std::move(x), tids = top[i].tids, children = std::move(children)]() mutable {
          branch(std::move(x), std::move(tids), std::move(children));
        });
      }
      pool.join();
    }
  }

  // Merge branch results: a candidate is closed iff no other candidate with the
  // same support strictly contains it.
  std::vector<Candidate> all;
  for (auto& s : stores) {
    for (auto& c : s->items()) all.push_back(std::move(c));
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.items.size() != b.items.size()) return a.items.size() > b.items.size();
    return a.items < b.items;
  });
  ClosedStore global;
  for (auto& c : all) global.insert(std::move(c));

  std::vector<ClosedItemset> out;
  for (auto& c : global.items()) {
    out.push_back(ClosedItemset{std::move(c.items), c.count, static_cast<double>(c.count) / static_cast<double>(n)});
  }
  if (full_support.empty()) out.push_back(ClosedItemset{{}, n, 1.0});
  if (min_count == 0 && support_count_of(db, present) == 0) out.push_back(ClosedItemset{present, 0, 0.0});
  if (params.max_itemsets && out.size() > *params.max_itemsets) {
    throw BudgetExceeded("mining produced " + std::to_string(out.size()) + " closed itemsets, above the cap of " +
                         std::to_string(*params.max_itemsets));
  }
  std::sort(out.begin(), out.end(), [](const ClosedItemset& a, const ClosedItemset& b) {
    if (a.support_count != b.support_count) return a.support_count > b.support_count;
    return a.items < b.items;
  });
  return out;
}

}  // namespace casemine
