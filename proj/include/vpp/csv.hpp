#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace vpp {

/// One CSV field. Doubles are written in shortest round-trip form and NaN as
/// an empty field.
using CsvCell = std::variant<double, long, std::string, bool>;

std::string format_number(double v);

/**
 * RFC-4180 style writer. The first line of every file is
 * `# schema: vppsim.<schema>/v1`, followed by the header row.
 */
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& schema, std::vector<std::string> columns);

  void row(const std::vector<CsvCell>& cells);
  /// Trailing `# note: ...` comment line.
  void note(const std::string& text);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

}  // namespace vpp
