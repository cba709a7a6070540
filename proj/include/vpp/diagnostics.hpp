#pragma once

#include <functional>
#include <string>

namespace vpp {

using WarningHandler = std::function<void(const std::string&)>;

/// Installs a handler for non-fatal warnings and returns the previous one.
/// The default handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace vpp
