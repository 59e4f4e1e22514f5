#include "casemine/kb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "casemine/digest.hpp"
#include "casemine/error.hpp"

namespace casemine {

namespace {

bool is_case_id(std::string_view s) {
  if (s.empty() || !std::isalnum(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
  });
}

std::string render_case(const Case& c) {
  std::string line = c.id + " | " + c.problem.text() + " | ";
  for (std::size_t i = 0; i < c.solution.size(); ++i) {
    if (i) line += ", ";
    line += c.solution[i];
  }
  return line;
}

}  // namespace

std::string kb_digest(const Ontology& ontology, const std::vector<Case>& cases) {
  std::vector<std::string> axioms;
  for (const auto& ax : ontology.axioms()) axioms.push_back(render_axiom(ax));
  std::vector<std::string> rows;
  for (const auto& c : cases) rows.push_back(render_case(c));
  std::sort(axioms.begin(), axioms.end());
  std::sort(rows.begin(), rows.end());
  std::string buf = "[ontology]\n";
  for (const auto& a : axioms) buf += a + "\n";
  buf += "[cases]\n";
  for (const auto& r : rows) buf += r + "\n";
  return sha256_hex(buf);
}

KnowledgeBase::KnowledgeBase(Ontology ontology, std::vector<Case> cases)
    : ontology_(std::move(ontology)), cases_(std::move(cases)) {
  Vocabulary vocab;
  for (const auto& ax : ontology_.axioms()) {
    if (const auto* inc = std::get_if<AtomicInclusion>(&ax)) {
      vocab.atomics.insert(inc->sub);
      vocab.atomics.insert(inc->super);
    } else {
      collect_vocabulary(std::get<Definition>(ax).body, vocab);
    }
  }
  std::set<std::string> ids;
  for (auto& c : cases_) {
    if (!is_case_id(c.id)) throw ValidationError("invalid case id '" + c.id + "'");
    if (!ids.insert(c.id).second) throw ValidationError("duplicate case id '" + c.id + "'");
    if (c.solution.empty()) throw ValidationError("case '" + c.id + "' has an empty solution");
    std::sort(c.solution.begin(), c.solution.end());
    c.solution.erase(std::unique(c.solution.begin(), c.solution.end()), c.solution.end());
    for (const auto& dec : c.solution) {
      if (!is_identifier(dec)) throw ValidationError("case '" + c.id + "': invalid decision name '" + dec + "'");
      if (ontology_.is_defined(dec)) {
        throw ValidationError("case '" + c.id + "': decision '" + dec + "' must be an atomic concept, not a defined one");
      }
      vocab.atomics.insert(dec);
      decisions_.insert(dec);
    }
    collect_vocabulary(c.problem, vocab);
    const NormalForm nf = normalize(c.problem, ontology_);
    if (has_empty_constraints(nf)) {
      throw ValidationError("case '" + c.id + "': problem has contradictory constraints");
    }
  }
  for (const auto& r : vocab.roles) {
    if (vocab.concrete_roles.count(r)) {
      throw ValidationError("'" + r + "' is used both as a role and as a concrete role");
    }
  }
  for (const auto& a : vocab.atomics) {
    if (!ontology_.is_defined(a)) atomics_.insert(a);
  }
  concrete_roles_ = vocab.concrete_roles;
  for (auto& [g, cs] : vocab.constraints) constraints_.emplace(g, std::move(cs));
  digest_ = kb_digest(ontology_, cases_);
}

const ConstraintSet& KnowledgeBase::constraints_of(std::string_view concrete_role) const {
  static const ConstraintSet kEmpty;
  auto it = constraints_.find(concrete_role);
  return it == constraints_.end() ? kEmpty : it->second;
}

std::size_t KnowledgeBase::find_case(std::string_view id) const {
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    if (cases_[i].id == id) return i;
  }
  return npos;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::size_t offset_in(std::string_view whole, std::string_view part) {
  return static_cast<std::size_t>(part.data() - whole.data());
}

Concept parse_concept_at(std::string_view line, std::string_view expr, std::size_t line_no) {
  try {
    return parse_concept(expr);
  } catch (const UnsupportedConstruct& e) {
    throw UnsupportedConstruct(e.detail(), line_no,
                               offset_in(line, expr) + e.column());
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), line_no,
                     offset_in(line, expr) + e.column());
  }
}

}  // namespace

KnowledgeBase parse_kb(std::string_view text) {
  enum class Section { kNone, kOntology, kCases };
  Section section = Section::kNone;
  std::vector<Axiom> axioms;
  std::vector<Case> cases;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    start = end + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const auto fail = [&](const std::string& msg, std::string_view at) -> ParseError {
      return ParseError(msg, line_no, offset_in(raw, at) + 1);
    };
    if (line == "[ontology]") {
      section = Section::kOntology;
    } else if (line == "[cases]") {
      section = Section::kCases;
    } else if (line.front() == '[') {
      throw fail("unknown section header '" + std::string(line) + "'", line);
    } else if (section == Section::kOntology) {
      if (auto pos = line.find(":="); pos != std::string_view::npos) {
        const std::string_view name = trim(line.substr(0, pos));
        if (!is_identifier(name)) throw fail("invalid defined name '" + std::string(name) + "'", line);
        const std::string_view body = trim(line.substr(pos + 2));
        if (body.empty()) throw fail("missing definition body", line.substr(pos));
        axioms.emplace_back(Definition{std::string(name), parse_concept_at(raw, body, line_no)});
      } else {
        std::istringstream words{std::string(line)};
        std::string sub, op, super, extra;
        words >> sub >> op >> super;
        if (op != "isa" || super.empty() || (words >> extra)) {
          throw fail("expected 'A isa B' or 'N := <concept>'", line);
        }
        if (!is_identifier(sub) || !is_identifier(super)) {
          // "(...) isa B" or "some r.C isa B": a general concept inclusion
          throw ValidationError("line " + std::to_string(line_no) +
                                ": only atomic inclusions 'A isa B' are supported");
        }
        axioms.emplace_back(AtomicInclusion{sub, super});
      }
    } else if (section == Section::kCases) {
      const auto p1 = line.find('|');
      const auto p2 = p1 == std::string_view::npos ? p1 : line.find('|', p1 + 1);
      if (p2 == std::string_view::npos || line.find('|', p2 + 1) != std::string_view::npos) {
        throw fail("expected 'id | <concept> | dec1, dec2, ...'", line);
      }
      Case c{std::string(trim(line.substr(0, p1))), Concept::atomic("_"), {}};
      if (!is_case_id(c.id)) throw fail("invalid case id '" + c.id + "'", line);
      const std::string_view expr = trim(line.substr(p1 + 1, p2 - p1 - 1));
      if (expr.empty()) throw fail("missing problem concept", line.substr(p1));
      c.problem = parse_concept_at(raw, expr, line_no);
      std::string_view decs = line.substr(p2 + 1);
      while (!decs.empty()) {
        auto comma = decs.find(',');
        const std::string_view dec = trim(decs.substr(0, comma));
        if (!is_identifier(dec)) throw fail("invalid decision name '" + std::string(dec) + "'", dec.empty() ? decs : dec);
        c.solution.emplace_back(dec);
        if (comma == std::string_view::npos) break;
        decs.remove_prefix(comma + 1);
      }
      cases.push_back(std::move(c));
    } else {
      throw fail("content before any section header", line);
    }
    if (end == text.size()) break;
  }
  return KnowledgeBase(Ontology(std::move(axioms)), std::move(cases));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

KnowledgeBase load_kb(const std::filesystem::path& path) { return parse_kb(read_file(path)); }

std::string render_kb(const KnowledgeBase& kb) {
  std::string out = "[ontology]\n";
  for (const auto& ax : kb.ontology().axioms()) out += render_axiom(ax) + "\n";
  out += "[cases]\n";
  for (const auto& c : kb.cases()) out += render_case(c) + "\n";
  return out;
}

}  // namespace casemine
