#pragma once

// Minimal RFC-4180 reader and writer.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pluralism/error.hpp"

namespace pluralism::csv {

using Record = std::vector<std::string>;

/// Parses the whole stream. Quoted fields may contain commas, CR/LF and
/// doubled quotes. A trailing newline does not produce an empty record.
/// Each record is paired with the 1-based physical line it starts on.
struct Table {
  std::vector<Record> records;
  std::vector<std::size_t> start_lines;
};

inline Table parse(std::istream& in) {
  Table table;
  Record record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    table.records.push_back(std::move(record));
    table.start_lines.push_back(record_line);
    record.clear();
    record_has_content = false;
  };

  char ch = 0;
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DataError("line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(ch);
        [[fallthrough]];
      case '\n':
        if (record_has_content || !field.empty()) end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (field_was_quoted) {
          throw DataError("line " + std::to_string(line) + ": text after closing quote");
        }
        field.push_back(ch);
        record_has_content = true;
    }
  }
  if (in_quotes) throw DataError("line " + std::to_string(record_line) + ": unterminated quoted field");
  if (record_has_content || !field.empty()) end_record();
  return table;
}

inline bool needs_quoting(std::string_view field) {
  if (field.empty()) return false;
  if (field.front() == ' ' || field.back() == ' ') return true;
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void write_field(std::ostream& out, std::string_view field) {
  if (!needs_quoting(field)) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void write_record(std::ostream& out, const Record& record) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i) out << ',';
    write_field(out, record[i]);
  }
  out << "\r\n";
}

}  // namespace pluralism::csv
