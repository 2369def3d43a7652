#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <stdexcept>
#include <utility>

namespace emsim {

/// Priority queue specialised for workloads with few distinct keys.
///
/// Values sharing a key live in one FIFO bucket, so pop order is ascending
/// key and then insertion order within a key. This is the same order a
/// stable binary heap would produce, but pushes onto an existing key cost a
/// map lookup plus a deque append rather than a heap sift.
template <class Key, class Value, class Compare = std::less<Key>>
class BucketQueue {
 public:
  using key_type = Key;
  using value_type = Value;

  void push(const Key& key, Value value) {
    buckets_[key].push_back(std::move(value));
    ++size_;
  }

  bool empty() const noexcept { return size_ == 0; }
  std::size_t size() const noexcept { return size_; }
  std::size_t key_count() const noexcept { return buckets_.size(); }

  const Key& top_key() const {
    require_nonempty();
    return buckets_.begin()->first;
  }

  const Value& top() const {
    require_nonempty();
    return buckets_.begin()->second.front();
  }

  /// index-th value (FIFO order) of the smallest key's bucket.
  const Value& top_at(std::size_t index) const {
    require_nonempty();
    const auto& bucket = buckets_.begin()->second;
    if (index >= bucket.size()) throw std::out_of_range("BucketQueue::top_at: index past bucket end");
    return bucket[index];
  }

  /// Number of values sharing the smallest key.
  std::size_t top_bucket_size() const {
    require_nonempty();
    return buckets_.begin()->second.size();
  }

  /// Removes and returns the oldest value with the smallest key.
  std::pair<Key, Value> pop() { return pop_at(0); }

  /// Removes and returns the index-th value (FIFO order) of the smallest
  /// key's bucket. Used by tie-break policies.
  std::pair<Key, Value> pop_at(std::size_t index) {
    require_nonempty();
    auto it = buckets_.begin();
    auto& bucket = it->second;
    if (index >= bucket.size()) throw std::out_of_range("BucketQueue::pop_at: index past bucket end");
    auto pos = bucket.begin() + static_cast<std::ptrdiff_t>(index);
    std::pair<Key, Value> out{it->first, std::move(*pos)};
    bucket.erase(pos);
    if (bucket.empty()) buckets_.erase(it);
    --size_;
    return out;
  }

  void clear() {
    buckets_.clear();
    size_ = 0;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [key, bucket] : buckets_)
      for (const auto& v : bucket) f(key, v);
  }

 private:
  void require_nonempty() const {
    if (size_ == 0) throw std::out_of_range("BucketQueue: empty");
  }

  std::map<Key, std::deque<Value>, Compare> buckets_;
  std::size_t size_ = 0;
};

}  // namespace emsim
