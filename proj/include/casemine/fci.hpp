#ifndef CASEMINE_FCI_HPP
#define CASEMINE_FCI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "casemine/miner.hpp"
#include "casemine/transactions.hpp"

namespace casemine {

/// A mined closed itemset expressed over marked properties.
struct Fci {
  std::string id;           // short hash of the canonical token list
  std::vector<Item> items;  // canonical order
  std::size_t support_count = 0;
  double support = 0.0;
  friend bool operator==(const Fci&, const Fci&) = default;
};

std::vector<std::string> fci_tokens(const Fci& fci, const PropertyUniverse& universe);
std::string fci_id(const std::vector<Item>& items, const PropertyUniverse& universe);

/// Converts miner output; keeps its order (support descending, then items).
std::vector<Fci> make_fcis(const std::vector<ClosedItemset>& mined, const PropertyUniverse& universe);

/// Export order: support descending, then token lists lexicographically.
void sort_for_export(std::vector<Fci>& fcis, const PropertyUniverse& universe);

/// One line per FCI: "<support_count>\t<token> <token> ...", in export order.
void write_fcis(std::ostream& out, std::vector<Fci> fcis, const PropertyUniverse& universe);
std::string fcis_text(const std::vector<Fci>& fcis, const PropertyUniverse& universe);

/// Parsed FCI export line.
struct FciLine {
  std::size_t support_count = 0;
  std::vector<std::string> tokens;
  friend bool operator==(const FciLine&, const FciLine&) = default;
};
/// Skips '#' lines. Throws ParseError.
std::vector<FciLine> read_fcis(std::istream& in);

}  // namespace casemine

#endif  // CASEMINE_FCI_HPP
