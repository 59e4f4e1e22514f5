#include "casemine/fci.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "casemine/digest.hpp"
#include "casemine/error.hpp"

namespace casemine {

std::vector<std::string> fci_tokens(const Fci& fci, const PropertyUniverse& universe) {
  std::vector<std::string> out;
  out.reserve(fci.items.size());
  for (const auto& it : fci.items) out.push_back(item_token(it, universe));
  return out;
}

std::string fci_id(const std::vector<Item>& items, const PropertyUniverse& universe) {
  std::string canon;
  for (const auto& it : items) {
    canon += item_token(it, universe);
    canon += '\n';
  }
  return short_hash(canon);
}

std::vector<Fci> make_fcis(const std::vector<ClosedItemset>& mined, const PropertyUniverse& universe) {
  std::vector<Fci> out;
  out.reserve(mined.size());
  for (const auto& m : mined) {
    Fci f;
    f.items.reserve(m.items.size());
    for (ItemId code : m.items) f.items.push_back(Item::from_code(code));
    std::sort(f.items.begin(), f.items.end());
    f.id = fci_id(f.items, universe);
    f.support_count = m.support_count;
    f.support = m.support;
    out.push_back(std::move(f));
  }
  return out;
}

void sort_for_export(std::vector<Fci>& fcis, const PropertyUniverse& universe) {
  std::vector<std::pair<std::vector<std::string>, std::size_t>> keys;
  keys.reserve(fcis.size());
  for (std::size_t i = 0; i < fcis.size(); ++i) keys.emplace_back(fci_tokens(fcis[i], universe), i);
  std::vector<std::size_t> order(fcis.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fcis[a].support_count != fcis[b].support_count) return fcis[a].support_count > fcis[b].support_count;
    return keys[a].first < keys[b].first;
  });
  std::vector<Fci> sorted;
  sorted.reserve(fcis.size());
  for (auto i : order) sorted.push_back(std::move(fcis[i]));
  fcis = std::move(sorted);
}

void write_fcis(std::ostream& out, std::vector<Fci> fcis, const PropertyUniverse& universe) {
  sort_for_export(fcis, universe);
  for (const auto& f : fcis) {
    out << f.support_count << '\t';
    bool first = true;
    for (const auto& tok : fci_tokens(f, universe)) {
      if (!first) out << ' ';
      out << tok;
      first = false;
    }
    out << '\n';
  }
}

std::string fcis_text(const std::vector<Fci>& fcis, const PropertyUniverse& universe) {
  std::ostringstream os;
  write_fcis(os, fcis, universe);
  return os.str();
}

std::vector<FciLine> read_fcis(std::istream& in) {
  std::vector<FciLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected '<count>\\t<items>'", lineno, 1);
    FciLine fl;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, fl.support_count);
    if (ec != std::errc() || ptr != line.data() + tab) throw ParseError("bad support count", lineno, 1);
    std::istringstream toks(line.substr(tab + 1));
    std::string tok;
    while (toks >> tok) fl.tokens.push_back(tok);
    out.push_back(std::move(fl));
  }
  return out;
}

}  // namespace casemine
