#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace isoforge {

using WarningSink = std::function<void(std::string_view)>;

/// Emits a non-fatal warning (rank shortfall, dim > n_rows, ...).
/// The default sink writes "warning: <msg>" to stderr. Thread-safe.
void warn(std::string_view message);

/// Replaces the sink and returns the previous one. An empty sink restores
/// the default.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace isoforge
