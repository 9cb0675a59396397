#pragma once

#include <functional>
#include <string>

namespace meshcnn::logging {

using WarnHandler = std::function<void(const std::string&)>;

// Default handler prints "[warn] ..." to stderr. Tests may install their own
// sink to assert that a warning fired. Not thread safe; install before work starts.
void warn(const std::string& msg);
void set_warn_handler(WarnHandler handler);
void reset_warn_handler();

} // namespace meshcnn::logging
