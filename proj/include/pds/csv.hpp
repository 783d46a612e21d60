#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pds/errors.hpp"

namespace pds {

// RFC 4180 subset: comma-separated, optional double-quoting with "" escapes,
// LF or CRLF row endings. Embedded newlines inside quoted fields are rejected
// (v1 restriction, which keeps canonical table serialization line-oriented).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else if (c == '\n' || c == '\r') {
        throw Error(Errc::parse_error,
                    "line " + std::to_string(line) + ": embedded newline in quoted field");
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw Error(Errc::parse_error,
                      "line " + std::to_string(line) + ": unexpected quote");
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 >= text.size() || text[i + 1] != '\n')
          throw Error(Errc::parse_error,
                      "line " + std::to_string(line) + ": bare carriage return");
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field += c;
    }
  }
  if (in_quotes)
    throw Error(Errc::parse_error, "unterminated quoted field");
  if (!field.empty() || field_was_quoted || !row.empty()) end_row();
  return rows;
}

}  // namespace pds
