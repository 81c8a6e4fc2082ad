// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace citytwin {

using WarningSink = std::function<void(std::string_view)>;

/// Reports a recoverable problem. The default sink prints to stderr.
void warn(std::string_view message);

/// Replaces the warning sink and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

} // namespace citytwin
