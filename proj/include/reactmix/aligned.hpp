#pragma once

#include <cstddef>
#include <cstdlib>
#include <new>
#include <vector>

namespace reactmix {

// 64-byte aligned allocator so kernel and FFT buffers satisfy SIMD alignment.
template <class T>
struct AlignedAlloc {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAlloc() = default;
  template <class U>
  AlignedAlloc(const AlignedAlloc<U>&) {}

  T* allocate(std::size_t n) {
    std::size_t bytes = (n * sizeof(T) + alignment - 1) / alignment * alignment;
    void* p = std::aligned_alloc(alignment, bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const AlignedAlloc<U>&) const { return true; }
};

template <class T>
using aligned_vector = std::vector<T, AlignedAlloc<T>>;

}  // namespace reactmix
