// Copyright 2026 The privot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVOT_COMMON_HPP_
#define PRIVOT_COMMON_HPP_

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace privot {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Caller-visible misuse of an operation (bad arguments, malformed files).
// The CLI maps this to exit code 2.
class InvalidArgument : public std::runtime_error {
 public:
  explicit InvalidArgument(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure during an otherwise well-posed computation (non-convergence,
// I/O errors). The CLI maps this to exit code 1.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

namespace detail {
inline std::string format_index(const char* what, long i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s %ld", what, i);
  return std::string(buf);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hashing, used for artifact provenance records. Hashing the
// raw little-endian bytes makes the digest sensitive to every output bit.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_bytes(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

inline std::uint64_t hash_matrix(const MatrixXd& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    h = fnv1a64(m.col(j).data(),
                static_cast<std::size_t>(m.rows()) * sizeof(double), h);
  return h;
}

inline std::uint64_t hash_vector(const VectorXd& v) {
  return fnv1a64(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Deterministic parallelism. Work is cut into fixed-size blocks and blocks
// are handed to worker threads. Block boundaries depend only on (n, block),
// never on the thread count, so any per-block partial results combine to the
// same floating-point value no matter how many threads ran.
// ---------------------------------------------------------------------------

namespace par {

inline int& thread_count_ref() {
  static int n = static_cast<int>(std::thread::hardware_concurrency());
  return n;
}

inline int max_threads() { return thread_count_ref() > 0 ? thread_count_ref() : 1; }
inline void set_max_threads(int n) { thread_count_ref() = n > 0 ? n : 1; }

// fn(block_index, begin, end) over [0, n) in blocks of `block` elements.
template <typename Fn>
void for_blocks(Eigen::Index n, Eigen::Index block, const Fn& fn) {
  if (n <= 0) return;
  const Eigen::Index nblocks = (n + block - 1) / block;
  const int nthreads =
      static_cast<int>(std::min<Eigen::Index>(max_threads(), nblocks));
  if (nthreads <= 1) {
    for (Eigen::Index bi = 0; bi < nblocks; ++bi)
      fn(bi, bi * block, std::min(n, (bi + 1) * block));
    return;
  }
  std::atomic<Eigen::Index> next{0};
  auto worker = [&]() {
    for (;;) {
      const Eigen::Index bi = next.fetch_add(1);
      if (bi >= nblocks) break;
      fn(bi, bi * block, std::min(n, (bi + 1) * block));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads) - 1);
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace par

}  // namespace privot

#endif  // PRIVOT_COMMON_HPP_
