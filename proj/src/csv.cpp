#include "vpp/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace vpp {

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string render(const CsvCell& c) {
  struct Visitor {
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(long v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return quote(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, c);
}

}  // namespace

CsvWriter::CsvWriter(std::ostream& out, const std::string& schema, std::vector<std::string> columns)
    : out_(out), columns_(columns.size()) {
  out_ << "# schema: vppsim." << schema << "/v1\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << quote(columns[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << render(cells[i]);
  out_ << '\n';
}

void CsvWriter::note(const std::string& text) { out_ << "# note: " << text << '\n'; }

}  // namespace vpp
