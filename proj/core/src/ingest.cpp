#include <charconv>
#include <optional>
#include <set>
#include <fstream>
#include <map>
#include <sstream>

#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/parser.hpp"

namespace infooirt {

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  long row = 0;  // 1-based line where the record starts
};

// RFC 4180: quoted fields may hold delimiters, newlines and doubled quotes.
std::vector<CsvRecord> read_records(const std::string& text, char delim) {
  std::vector<CsvRecord> records;
  CsvRecord rec;
  std::string field;
  long line = 1;
  rec.row = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool after_quote = false;
  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
    after_quote = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(rec.fields.size() == 1 && rec.fields[0].empty())) records.push_back(std::move(rec));
    rec = CsvRecord{};
    rec.row = line;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      ++line;
      end_record();
    } else {
      if (after_quote) throw IngestionError("text after closing quote", line);
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw IngestionError("unterminated quoted field", rec.row);
  if (field_started || !rec.fields.empty()) end_record();
  return records;
}

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

bool earlier(const std::string& a, const std::string& b) {
  const auto na = as_number(a);
  const auto nb = as_number(b);
  if (na && nb) return *na < *nb;
  return a < b;
}

}  // namespace

IngestedCorpus ingest_csedm_text(const std::string& text, const CsedmColumns& columns) {
  const auto records = read_records(text, columns.delimiter);
  if (records.empty()) throw IngestionError("submission table is empty");
  const auto& header = records.front().fields;
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IngestionError("missing column '" + name + "'", 1);
  };
  const std::size_t c_student = column(columns.student_id);
  const std::size_t c_problem = column(columns.problem_id);
  const std::size_t c_time = column(columns.timestamp);
  const std::size_t c_code = column(columns.code);
  const std::optional<std::size_t> c_prompt =
      columns.prompt.empty() ? std::nullopt : std::optional(column(columns.prompt));

  IngestedCorpus out;
  IngestionReport& rep = out.report;
  std::map<std::pair<std::string, std::string>, std::size_t> first;
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::string, std::string> prompts;
  std::vector<std::string> problem_order;

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != header.size()) {
      throw IngestionError("expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(f.size()),
                           records[r].row);
    }
    if (f[c_student].empty() || f[c_problem].empty()) {
      throw IngestionError("empty student or problem id", records[r].row);
    }
    ++rep.rows;
    const std::pair key{f[c_student], f[c_problem]};
    if (!prompts.contains(f[c_problem])) {
      problem_order.push_back(f[c_problem]);
      prompts[f[c_problem]] = c_prompt ? f[*c_prompt] : std::string();
    }
    const auto it = first.find(key);
    if (it == first.end()) {
      first.emplace(key, r);
      order.push_back(key);
    } else if (earlier(f[c_time], records[it->second].fields[c_time])) {
      it->second = r;
    }
  }
  if (rep.rows == 0) throw IngestionError("submission table has no data rows");
  rep.first_attempts = static_cast<long>(first.size());
  rep.dropped_later_attempts = rep.rows - rep.first_attempts;

  std::set<std::string> used_problems;
  for (const auto& key : order) {
    const auto& f = records[first.at(key)].fields;
    Submission s;
    s.student_id = key.first;
    s.problem_id = key.second;
    s.code = f[c_code];
    s.is_first_attempt = true;
    s.parses = !s.code.empty() && parses(s.code);
    if (!s.parses) {
      ++rep.dropped_unparseable;
      continue;
    }
    used_problems.insert(s.problem_id);
    out.corpus.submissions.push_back(std::move(s));
  }
  rep.retained = static_cast<long>(out.corpus.submissions.size());
  rep.drop_fraction = static_cast<double>(rep.dropped_unparseable) / static_cast<double>(rep.first_attempts);
  if (rep.retained == 0) throw IngestionError("no submission survived filtering");

  for (const auto& pid : problem_order) {
    if (!used_problems.contains(pid)) continue;
    Problem p;
    p.problem_id = pid;
    p.statement = prompts[pid].empty() ? "Problem " + pid : prompts[pid];
    out.corpus.problems.push_back(std::move(p));
  }
  return out;
}

IngestedCorpus ingest_csedm(const std::filesystem::path& path, const CsedmColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_csedm_text(buf.str(), columns);
}

}  // namespace infooirt
