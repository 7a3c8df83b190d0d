#include "carpetq/word_store.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>

namespace carpetq {

WordStore::Id WordStore::push(PackedView word) {
  if (offsets_.size() >= std::numeric_limits<Id>::max() - 2) {
    throw std::length_error("word store exceeds 2^32 words");
  }
  if (word.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::length_error("word longer than 65535 symbols");
  }
  offsets_.push_back(bytes_.size());
  lengths_.push_back(static_cast<std::uint16_t>(word.size()));
  bytes_.insert(bytes_.end(), word.begin(), word.end());
  return static_cast<Id>(offsets_.size() - 1);
}

void WordStore::append(const WordStore& other) {
  const auto base = bytes_.size();
  bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
  for (std::size_t i = 0; i < other.size(); ++i) {
    offsets_.push_back(base + other.offsets_[i]);
    lengths_.push_back(other.lengths_[i]);
  }
}

void WordStore::reserve(std::size_t words, std::size_t bytes) {
  offsets_.reserve(words);
  lengths_.reserve(words);
  bytes_.reserve(bytes);
}

void WordStore::clear() {
  bytes_.clear();
  offsets_.clear();
  lengths_.clear();
}

std::uint64_t hash_word(PackedView word) {
  // FNV-1a with a final avalanche.
  std::uint64_t h = 1469598103934665603ull ^ word.size();
  for (auto b : word) {
    h ^= b;
    h *= 1099511628211ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

WordIndex::WordIndex(const WordStore& store, std::size_t expected) : store_(&store) {
  std::size_t cap = 16;
  while (cap < expected * 2) cap <<= 1;
  slots_.assign(cap, kEmpty);
}

std::size_t WordIndex::probe_start(PackedView word) const {
  return static_cast<std::size_t>(hash_word(word)) & (slots_.size() - 1);
}

void WordIndex::grow() {
  std::vector<std::uint32_t> old = std::move(slots_);
  std::size_t cap = old.size();
  if (live_ * 2 >= cap / 2) cap <<= 1;
  slots_.assign(cap, kEmpty);
  used_ = live_;
  for (auto id : old) {
    if (id == kEmpty || id == kTomb) continue;
    auto word = (*store_)[id];
    std::size_t s = probe_start(word);
    while (slots_[s] != kEmpty) s = (s + 1) & (slots_.size() - 1);
    slots_[s] = id;
  }
}

bool WordIndex::insert(WordStore::Id id) {
  if ((used_ + 1) * 10 > slots_.size() * 6) grow();
  auto word = (*store_)[id];
  std::size_t s = probe_start(word);
  std::size_t first_tomb = slots_.size();
  while (slots_[s] != kEmpty) {
    const auto cur = slots_[s];
    if (cur == kTomb) {
      if (first_tomb == slots_.size()) first_tomb = s;
    } else {
      auto other = (*store_)[cur];
      if (std::equal(other.begin(), other.end(), word.begin(), word.end())) return false;
    }
    s = (s + 1) & (slots_.size() - 1);
  }
  if (first_tomb != slots_.size()) {
    slots_[first_tomb] = id;
  } else {
    slots_[s] = id;
    ++used_;
  }
  ++live_;
  return true;
}

std::optional<WordStore::Id> WordIndex::find(PackedView word) const {
  std::size_t s = probe_start(word);
  while (slots_[s] != kEmpty) {
    const auto cur = slots_[s];
    if (cur != kTomb) {
      auto other = (*store_)[cur];
      if (std::equal(other.begin(), other.end(), word.begin(), word.end())) return cur;
    }
    s = (s + 1) & (slots_.size() - 1);
  }
  return std::nullopt;
}

bool WordIndex::erase(PackedView word) {
  std::size_t s = probe_start(word);
  while (slots_[s] != kEmpty) {
    const auto cur = slots_[s];
    if (cur != kTomb) {
      auto other = (*store_)[cur];
      if (std::equal(other.begin(), other.end(), word.begin(), word.end())) {
        slots_[s] = kTomb;
        --live_;
        return true;
      }
    }
    s = (s + 1) & (slots_.size() - 1);
  }
  return false;
}

}  // namespace carpetq
