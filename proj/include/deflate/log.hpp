#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <string_view>
#include <utility>

namespace deflate {

using LogSink = std::function<void(std::string_view)>;

namespace detail {
inline LogSink& warning_sink() {
  static LogSink sink = [](std::string_view msg) {
    std::cerr << "deflate: warning: " << msg << '\n';
  };
  return sink;
}
}  // namespace detail

/// Replace the warning sink; returns the previous one. Pass an empty
/// function to silence warnings.
inline LogSink set_warning_sink(LogSink sink) {
  return std::exchange(detail::warning_sink(), std::move(sink));
}

inline void log_warning(std::string_view msg) {
  if (auto& sink = detail::warning_sink()) sink(msg);
}

}  // namespace deflate
