#pragma once

#include "emsim/errors.hpp"
#include "emsim/kernel/event.hpp"

#include <map>
#include <memory>
#include <string>

namespace emsim {

/// Debug-only map from an address to the entity that owns it.
///
/// Always populated, but lookups fail unless explicitly enabled so that
/// ordinary simulation code cannot reach across the address boundary.
template <class Key>
class DereferenceRegistry {
 public:
  bool enabled() const noexcept { return enabled_; }
  void set_enabled(bool on) noexcept { enabled_ = on; }

  void record(const Key& key, const std::shared_ptr<Entity>& owner) { owners_[key] = owner; }
  void forget(const Key& key) { owners_.erase(key); }
  std::size_t size() const noexcept { return owners_.size(); }

  template <class T = Entity>
  T& dereference(const Key& key) const {
    if (!enabled_) throw DereferenceError("dereference registry is disabled");
    auto it = owners_.find(key);
    auto owner = it == owners_.end() ? nullptr : it->second.lock();
    if (!owner) throw DereferenceError("no live owner for address " + to_string(key));
    auto* typed = dynamic_cast<T*>(owner.get());
    if (!typed) throw DereferenceError("owner of " + to_string(key) + " has unexpected type");
    return *typed;
  }

 private:
  bool enabled_ = false;
  std::map<Key, std::weak_ptr<Entity>> owners_;
};

}  // namespace emsim
