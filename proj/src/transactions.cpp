#include "casemine/transactions.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "casemine/error.hpp"

namespace casemine {

std::string_view part_token(Part p) { return p == Part::kPb ? "pb" : "sol"; }

std::string_view marker_token(Marker m) {
  switch (m) {
    case Marker::kMinus: return "-";
    case Marker::kEqual: return "=";
    case Marker::kPlus: return "+";
  }
  return "?";
}

std::string escape_key(std::string_view key) {
  std::string out;
  out.reserve(key.size());
  for (char ch : key) {
    if (ch == '%') {
      out += "%25";
    } else if (ch == ' ') {
      out += "%20";
    } else {
      out += ch;
    }
  }
  return out;
}

std::string unescape_key(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && s.substr(i, 3) == "%20") {
      out += ' ';
      i += 2;
    } else if (s[i] == '%' && s.substr(i, 3) == "%25") {
      out += '%';
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string item_token(const Item& item, const PropertyUniverse& universe) {
  std::string out = escape_key(universe.key(item.ordinal));
  out += '|';
  out += part_token(item.part);
  out += '|';
  out += marker_token(item.marker);
  return out;
}

Item parse_item_token(std::string_view token, const PropertyUniverse& universe) {
  auto last = token.rfind('|');
  if (last == std::string_view::npos || last == 0) throw ParseError("malformed item token '" + std::string(token) + "'");
  auto mid = token.rfind('|', last - 1);
  if (mid == std::string_view::npos) throw ParseError("malformed item token '" + std::string(token) + "'");
  auto key = unescape_key(token.substr(0, mid));
  auto part_s = token.substr(mid + 1, last - mid - 1);
  auto marker_s = token.substr(last + 1);
  Item item;
  if (part_s == "pb") {
    item.part = Part::kPb;
  } else if (part_s == "sol") {
    item.part = Part::kSol;
  } else {
    throw ParseError("bad part in item token '" + std::string(token) + "'");
  }
  if (marker_s == "-") {
    item.marker = Marker::kMinus;
  } else if (marker_s == "=") {
    item.marker = Marker::kEqual;
  } else if (marker_s == "+") {
    item.marker = Marker::kPlus;
  } else {
    throw ParseError("bad marker in item token '" + std::string(token) + "'");
  }
  auto ord = universe.find(key);
  if (!ord) throw ValidationError("unknown property '" + key + "'");
  item.ordinal = *ord;
  return item;
}

namespace {

void append_part(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b, Part part, std::vector<Item>& out) {
  for (std::size_t w = 0; w < a.size(); ++w) {
    std::uint64_t any = a[w] | b[w];
    while (any) {
      auto bit = static_cast<unsigned>(std::countr_zero(any));
      any &= any - 1;
      bool in_a = (a[w] >> bit) & 1u;
      bool in_b = (b[w] >> bit) & 1u;
      Marker m = in_a && in_b ? Marker::kEqual : (in_a ? Marker::kMinus : Marker::kPlus);
      out.push_back(Item{static_cast<Ordinal>(w * 64 + bit), part, m});
    }
  }
}

void append_codes(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b, ItemId part_offset,
                  std::vector<ItemId>& out) {
  for (std::size_t w = 0; w < a.size(); ++w) {
    std::uint64_t any = a[w] | b[w];
    while (any) {
      auto bit = static_cast<unsigned>(std::countr_zero(any));
      any &= any - 1;
      bool in_a = (a[w] >> bit) & 1u;
      bool in_b = (b[w] >> bit) & 1u;
      ItemId marker = in_a && in_b ? 1 : (in_a ? 0 : 2);
      out.push_back(static_cast<ItemId>(w * 64 + bit) * 6 + part_offset + marker);
    }
  }
}

}  // namespace

Transaction encode_pair(const PropertySet& pb1, const PropertySet& pb2, const PropertySet& sol1,
                        const PropertySet& sol2) {
  require_same_universe(pb1, pb2);
  require_same_universe(pb1, sol1);
  require_same_universe(pb1, sol2);
  Transaction t;
  append_part(pb1.words(), pb2.words(), Part::kPb, t.items);
  append_part(sol1.words(), sol2.words(), Part::kSol, t.items);
  return t;
}

void encode_pair_codes(const FormattedCase& a, const FormattedCase& b, std::vector<ItemId>& out) {
  out.clear();
  append_codes(a.problem.words(), b.problem.words(), 0, out);
  append_codes(a.solution.words(), b.solution.words(), 3, out);
  std::sort(out.begin(), out.end());
}

std::size_t problem_overlap(const FormattedCase& a, const FormattedCase& b) {
  auto wa = a.problem.words();
  auto wb = b.problem.words();
  std::size_t n = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) n += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
  return n;
}

void for_each_pair(const FormattedCaseBase& cb, std::optional<std::size_t> min_overlap,
                   const std::function<void(std::size_t, std::size_t, std::span<const ItemId>)>& visit) {
  std::vector<ItemId> codes;
  const auto& cs = cb.cases;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (i == j) continue;
      if (min_overlap && problem_overlap(cs[i], cs[j]) < *min_overlap) continue;
      encode_pair_codes(cs[i], cs[j], codes);
      visit(i, j, codes);
    }
  }
}

std::vector<Transaction> build_transactions(const FormattedCaseBase& cb, std::optional<std::size_t> min_overlap) {
  std::vector<Transaction> out;
  const auto& cs = cb.cases;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (i == j) continue;
      if (min_overlap && problem_overlap(cs[i], cs[j]) < *min_overlap) continue;
      Transaction t = encode_pair(cs[i].problem, cs[j].problem, cs[i].solution, cs[j].solution);
      t.first = i;
      t.second = j;
      out.push_back(std::move(t));
    }
  }
  return out;
}

EncodedDatabase encode_database(const FormattedCaseBase& cb, std::optional<std::size_t> min_overlap,
                                const std::function<void(std::size_t, std::size_t)>& progress,
                                const std::atomic<bool>* cancel) {
  EncodedDatabase db;
  db.universe = cb.universe;
  for (const auto& c : cb.cases) db.case_ids.push_back(c.id);
  const auto& cs = cb.cases;
  const std::size_t n = cs.size();
  const std::size_t total = n < 2 ? 0 : n * (n - 1);
  if (n > 0 && !min_overlap) {
    std::size_t sum = 0;
    for (const auto& c : cs) sum += c.problem.count() + c.solution.count();
    db.rows.reserve(total, total * (2 * sum / n));
  }
  const std::size_t step = std::max<std::size_t>(1, total / 100);
  std::size_t done = 0;
  std::size_t next_report = step;
  std::vector<ItemId> codes;
  if (cancel && cancel->load(std::memory_order_relaxed)) throw Interrupted();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (++done >= next_report) {  // checkpoint every 1% of pairs
        if (cancel && cancel->load(std::memory_order_relaxed)) throw Interrupted();
        if (progress) progress(done, total);
        next_report = done + step;
      }
      if (min_overlap && problem_overlap(cs[i], cs[j]) < *min_overlap) continue;
      encode_pair_codes(cs[i], cs[j], codes);
      db.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      db.rows.add(codes);
    }
  }
  if (progress) progress(total, total);
  return db;
}

namespace {

void finish_stats(TransactionStats& s) {
  if (s.count == 0 || s.frequency.empty()) return;
  double mean = static_cast<double>(s.total_items) / static_cast<double>(s.count);
  s.density = mean / static_cast<double>(s.frequency.size());
}

}  // namespace

TransactionStats transaction_stats(std::span<const Transaction> ts) {
  TransactionStats s;
  for (const auto& t : ts) {
    ++s.count;
    s.total_items += t.items.size();
    for (const auto& it : t.items) ++s.frequency[it];
  }
  finish_stats(s);
  return s;
}

TransactionStats transaction_stats(const EncodedDatabase& db) {
  TransactionStats s;
  std::unordered_map<ItemId, std::size_t> freq;
  for (std::size_t t = 0; t < db.rows.size(); ++t) {
    ++s.count;
    auto row = db.rows[t];
    s.total_items += row.size();
    for (ItemId code : row) ++freq[code];
  }
  for (auto [code, f] : freq) s.frequency[Item::from_code(code)] = f;
  finish_stats(s);
  return s;
}

void for_each_transaction_line(const EncodedDatabase& db, const std::function<void(std::string_view)>& sink) {
  std::vector<std::string> tokens(db.universe->size() * 6);
  for (std::size_t code = 0; code < tokens.size(); ++code) {
    tokens[code] = item_token(Item::from_code(static_cast<ItemId>(code)), *db.universe);
  }
  std::string line;
  for (std::size_t t = 0; t < db.rows.size(); ++t) {
    auto [i, j] = db.pairs[t];
    line.clear();
    line += db.case_ids[i];
    line += ',';
    line += db.case_ids[j];
    line += ':';
    // Codes are ordered by ordinal first; canonical order wants all pb items first.
    for (ItemId part_lo : {0u, 3u}) {
      for (ItemId code : db.rows[t]) {
        if (code % 6 >= part_lo && code % 6 < part_lo + 3) {
          line += ' ';
          line += tokens[code];
        }
      }
    }
    line += '\n';
    sink(line);
  }
}

void write_transactions(std::ostream& out, const EncodedDatabase& db) {
  for_each_transaction_line(db, [&](std::string_view line) { out << line; });
}

std::string transactions_text(const EncodedDatabase& db) {
  std::string out;
  for_each_transaction_line(db, [&](std::string_view line) { out += line; });
  return out;
}

TokenDatabase read_transactions(std::istream& in) {
  TokenDatabase db;
  std::unordered_map<std::string, ItemId> ids;
  std::string line;
  std::size_t lineno = 0;
  std::vector<ItemId> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto colon = line.find(':');
    auto comma = line.find(',');
    if (colon == std::string::npos || comma == std::string::npos || comma > colon) {
      throw ParseError("expected '<id1>,<id2>:' prefix", lineno, 1);
    }
    db.pairs.emplace_back(line.substr(0, comma), line.substr(comma + 1, colon - comma - 1));
    row.clear();
    std::istringstream toks(line.substr(colon + 1));
    std::string tok;
    while (toks >> tok) {
      auto [it, inserted] = ids.emplace(tok, static_cast<ItemId>(db.names.size()));
      if (inserted) db.names.push_back(tok);
      row.push_back(it->second);
    }
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end()) {
      throw ParseError("duplicate item in transaction", lineno, 1);
    }
    db.rows.add(row);
  }
  return db;
}

}  // namespace casemine
