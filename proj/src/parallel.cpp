#include "attn_audit/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace attn_audit {

std::size_t configured_threads() {
  std::size_t requested = 0;
  if (const char* env = std::getenv("ATTN_AUDIT_THREADS")) {
    std::string_view text(env);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size()) requested = value;
  }
  if (requested == 0) {
    requested = std::thread::hardware_concurrency();
  }
  return requested == 0 ? 1 : requested;
}

}  // namespace attn_audit
