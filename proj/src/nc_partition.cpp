#include "vortex/nc_partition.hpp"

#include <algorithm>
#include <numeric>

namespace vortex {

namespace {

void normalize(NoncrossingPartition::BlockList& blocks) {
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  std::sort(blocks.begin(), blocks.end());
}

}  // namespace

bool is_noncrossing(const NoncrossingPartition::BlockList& blocks) {
  for (std::size_t p = 0; p < blocks.size(); ++p)
    for (std::size_t q = 0; q < blocks.size(); ++q) {
      if (p == q) continue;
      const auto& b1 = blocks[p];
      const auto& b2 = blocks[q];
      for (std::size_t i = 0; i < b1.size(); ++i)
        for (std::size_t j = i + 1; j < b1.size(); ++j) {
          int a = std::min(b1[i], b1[j]), c = std::max(b1[i], b1[j]);
          bool inside = false, outside = false;
          for (int x : b2) (x > a && x < c ? inside : outside) = true;
          if (inside && outside) return false;
        }
    }
  return true;
}

NoncrossingPartition::NoncrossingPartition(int n, BlockList blocks) : n_(n), blocks_(std::move(blocks)) {
  if (n < 1) throw DomainError("partition ground set must be nonempty");
  normalize(blocks_);
  label_.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].empty()) throw DomainError("partition has an empty block");
    for (int x : blocks_[b]) {
      if (x < 1 || x > n) throw DomainError("partition element out of range");
      auto& slot = label_[static_cast<std::size_t>(x - 1)];
      if (slot != -1) throw DomainError("partition blocks overlap");
      slot = static_cast<int>(b);
    }
  }
  if (std::find(label_.begin(), label_.end(), -1) != label_.end())
    throw DomainError("partition blocks do not cover the ground set");
  if (!is_noncrossing(blocks_)) throw DomainError("partition " + to_string() + " is crossing");
}

NoncrossingPartition NoncrossingPartition::singletons(int n) {
  BlockList b;
  for (int i = 1; i <= n; ++i) b.push_back({i});
  return {n, std::move(b)};
}

NoncrossingPartition NoncrossingPartition::one_block(int n) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 1);
  return {n, {all}};
}

std::string NoncrossingPartition::to_string() const {
  std::string out;
  for (const auto& b : blocks_) {
    out += '{';
    for (std::size_t i = 0; i < b.size(); ++i) out += (i ? "," : "") + std::to_string(b[i]);
    out += '}';
  }
  return out;
}

std::vector<NoncrossingPartition> enumerate_nc(int n) {
  if (n < 1 || n > 12) throw DomainError("enumerate_nc: n must be in [1, 12]");
  static std::mutex mutex;
  static std::map<int, std::vector<NoncrossingPartition>> memo;
  {
    std::lock_guard lock(mutex);
    if (auto it = memo.find(n); it != memo.end()) return it->second;
  }
  std::vector<NoncrossingPartition> out;
  std::vector<std::vector<int>> blocks;
  // Adding element k to block b closes the chord (max b, k); it crosses iff
  // another block has elements both inside and before that chord.
  auto crosses = [&](std::size_t b, int k) {
    int m = blocks[b].back();
    for (std::size_t c = 0; c < blocks.size(); ++c) {
      if (c == b) continue;
      bool inside = false, before = false;
      for (int x : blocks[c]) {
        if (x > m && x < k) inside = true;
        if (x < m) before = true;
      }
      if (inside && before) return true;
    }
    return false;
  };
  auto rec = [&](auto&& self, int k) -> void {
    if (k > n) {
      out.emplace_back(n, blocks);
      return;
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (crosses(b, k)) continue;
      blocks[b].push_back(k);
      self(self, k + 1);
      blocks[b].pop_back();
    }
    blocks.push_back({k});
    self(self, k + 1);
    blocks.pop_back();
  };
  rec(rec, 1);
  std::lock_guard lock(mutex);
  memo.emplace(n, out);
  return out;
}

NoncrossingPartition kreweras(const NoncrossingPartition& pi) {
  int n = pi.size();
  // closed[i][j]: {i+1..j} is a union of blocks of pi.
  auto closed = [&](int i, int j) {
    for (int x = i + 1; x <= j; ++x)
      for (int y : pi.blocks()[static_cast<std::size_t>(pi.block_of(x))])
        if (y <= i || y > j) return false;
    return true;
  };
  std::vector<int> leader(static_cast<std::size_t>(n + 1), 0);
  NoncrossingPartition::BlockList blocks;
  for (int i = 1; i <= n; ++i) {
    if (leader[static_cast<std::size_t>(i)]) continue;
    std::vector<int> block{i};
    leader[static_cast<std::size_t>(i)] = i;
    for (int j = i + 1; j <= n; ++j)
      if (!leader[static_cast<std::size_t>(j)] && closed(i, j)) {
        block.push_back(j);
        leader[static_cast<std::size_t>(j)] = i;
      }
    blocks.push_back(std::move(block));
  }
  return {n, std::move(blocks)};
}

std::uint64_t catalan_number(int n) {
  std::uint64_t c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

}  // namespace vortex
