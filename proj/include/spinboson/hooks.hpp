#pragma once

// Fault-injection switches for exercising the verification suite. Only
// compiled into debug builds or targets defining SPINBOSON_TEST_HOOKS.

#if !defined(NDEBUG) || defined(SPINBOSON_TEST_HOOKS)
#define SPINBOSON_HAS_TEST_HOOKS 1
#else
#define SPINBOSON_HAS_TEST_HOOKS 0
#endif

namespace spinboson::hooks {

#if SPINBOSON_HAS_TEST_HOOKS
/// When set, the K2 kernel is scaled by 1.5.
inline bool& tamper_kernel() {
  static bool flag = false;
  return flag;
}
#endif

inline bool kernel_tampered() {
#if SPINBOSON_HAS_TEST_HOOKS
  return tamper_kernel();
#else
  return false;
#endif
}

}  // namespace spinboson::hooks
