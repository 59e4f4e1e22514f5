#ifndef CASEMINE_TRANSACTIONS_HPP
#define CASEMINE_TRANSACTIONS_HPP

#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casemine/miner.hpp"
#include "casemine/phi.hpp"

namespace casemine {

enum class Part : std::uint8_t { kPb = 0, kSol = 1 };
enum class Marker : std::uint8_t { kMinus = 0, kEqual = 1, kPlus = 2 };

/// One marked property of a case pair. Canonical order is (part, ordinal, marker).
struct Item {
  Ordinal ordinal = 0;
  Part part = Part::kPb;
  Marker marker = Marker::kEqual;

  /// Dense miner id: ordinal * 6 + part * 3 + marker.
  ItemId code() const {
    return ordinal * 6 + static_cast<ItemId>(part) * 3 + static_cast<ItemId>(marker);
  }
  static Item from_code(ItemId code) {
    return {code / 6, static_cast<Part>((code % 6) / 3), static_cast<Marker>(code % 3)};
  }

  friend auto operator<=>(const Item& a, const Item& b) {
    if (auto c = a.part <=> b.part; c != 0) return c;
    if (auto c = a.ordinal <=> b.ordinal; c != 0) return c;
    return a.marker <=> b.marker;
  }
  friend bool operator==(const Item&, const Item&) = default;
};

std::string_view part_token(Part p);      // "pb" | "sol"
std::string_view marker_token(Marker m);  // "-" | "=" | "+"

/// Property keys inside tokens have spaces written as "%20" (and '%' as "%25").
std::string escape_key(std::string_view key);
std::string unescape_key(std::string_view token_key);

/// "<escaped key>|<part>|<marker>"
std::string item_token(const Item& item, const PropertyUniverse& universe);
/// Throws ParseError for malformed tokens, ValidationError for unknown keys.
Item parse_item_token(std::string_view token, const PropertyUniverse& universe);

/// One ordered case pair as a marked item set.
struct Transaction {
  std::size_t first = 0;   // index into FormattedCaseBase::cases
  std::size_t second = 0;
  std::vector<Item> items;  // canonical order
  friend bool operator==(const Transaction&, const Transaction&) = default;
};

/// minus = 1 \ 2, equal = 1 & 2, plus = 2 \ 1, for problem and solution parts
/// independently. Throws UniverseMismatch.
Transaction encode_pair(const PropertySet& pb1, const PropertySet& pb2, const PropertySet& sol1,
                        const PropertySet& sol2);

/// Item codes of the pair, ascending. Same content as encode_pair.
void encode_pair_codes(const FormattedCase& a, const FormattedCase& b, std::vector<ItemId>& out);

/// Number of shared problem properties.
std::size_t problem_overlap(const FormattedCase& a, const FormattedCase& b);

/// Visits every ordered pair (i, j), i != j, row-major, keeping those whose problem
/// overlap is at least `min_overlap` when given.
void for_each_pair(const FormattedCaseBase& cb, std::optional<std::size_t> min_overlap,
                   const std::function<void(std::size_t, std::size_t, std::span<const ItemId>)>& visit);

std::vector<Transaction> build_transactions(const FormattedCaseBase& cb, std::optional<std::size_t> min_overlap = {});

/// Transaction table ready for mining: item codes plus the pair each row encodes.
struct EncodedDatabase {
  UniversePtr universe;
  std::vector<std::string> case_ids;  // ids of the formatted cases, by formatted index
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  TransactionDb rows;
};

/// `progress(done, total)` fires about every 1% of pairs; `cancel` aborts with Interrupted.
EncodedDatabase encode_database(const FormattedCaseBase& cb, std::optional<std::size_t> min_overlap = {},
                                const std::function<void(std::size_t, std::size_t)>& progress = {},
                                const std::atomic<bool>* cancel = nullptr);

struct TransactionStats {
  std::size_t count = 0;
  std::size_t total_items = 0;
  std::map<Item, std::size_t> frequency;
  /// Mean transaction length divided by the number of distinct items (0 when empty).
  double density = 0.0;
};

TransactionStats transaction_stats(std::span<const Transaction> ts);
TransactionStats transaction_stats(const EncodedDatabase& db);

/// Text export, one line per transaction:
///   "<id1>,<id2>: <token> <token> ..."  (tokens in canonical item order)
void write_transactions(std::ostream& out, const EncodedDatabase& db);
/// Streams the export lines (each ending in '\n') without building the whole text.
void for_each_transaction_line(const EncodedDatabase& db, const std::function<void(std::string_view)>& sink);
std::string transactions_text(const EncodedDatabase& db);

/// Reads the text export back as a generic database whose item ids index `names`
/// (the tokens, in first-appearance order).
struct TokenDatabase {
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> pairs;
  TransactionDb rows;
};
TokenDatabase read_transactions(std::istream& in);

}  // namespace casemine

#endif  // CASEMINE_TRANSACTIONS_HPP
