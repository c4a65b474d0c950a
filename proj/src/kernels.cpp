#include "reactmix/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace reactmix::kernels {

#if defined(REACTMIX_BUILD_AVX2)
const Ops* avx2_ops();
#endif
#if defined(REACTMIX_BUILD_NEON)
const Ops* neon_ops();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::vector<const Ops*> build_available() {
  std::vector<const Ops*> v;
  v.push_back(&ref());
#if defined(REACTMIX_BUILD_AVX2)
  if (const Ops* o = avx2_ops(); o && cpu_has_avx2()) v.push_back(o);
#endif
#if defined(REACTMIX_BUILD_NEON)
  if (const Ops* o = neon_ops()) v.push_back(o);
#endif
  return v;
}

const Ops* select_active() {
  const auto& v = available();
  if (const char* force = std::getenv("REACTMIX_KERNELS")) {
    for (const Ops* o : v)
      if (std::strcmp(o->name, force) == 0) return o;
    return &ref();  // unknown or unavailable name: fall back to scalar
  }
  return v.back();  // fastest variant this CPU supports
}

}  // namespace

std::vector<const Ops*> available() {
  static const std::vector<const Ops*> v = build_available();
  return v;
}

const Ops& active() {
  static const Ops* a = select_active();
  return *a;
}

}  // namespace reactmix::kernels
