#pragma once

#include "carpetq/word.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace carpetq {

// Append-only arena of packed words. Ids are dense and stable.
class WordStore {
 public:
  using Id = std::uint32_t;

  Id push(PackedView word);
  void append(const WordStore& other);
  void reserve(std::size_t words, std::size_t bytes);
  void clear();

  std::size_t size() const { return offsets_.size(); }
  bool empty() const { return offsets_.empty(); }
  PackedView operator[](Id id) const {
    return {bytes_.data() + offsets_[id], static_cast<std::size_t>(lengths_[id])};
  }
  int length(Id id) const { return lengths_[id]; }
  std::size_t byte_size() const { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint16_t> lengths_;
};

std::uint64_t hash_word(PackedView word);

// Open-addressing set of word ids over a store, keyed by the packed bytes.
class WordIndex {
 public:
  explicit WordIndex(const WordStore& store, std::size_t expected = 0);

  // Returns false if an equal word is already present.
  bool insert(WordStore::Id id);
  std::optional<WordStore::Id> find(PackedView word) const;
  bool contains(PackedView word) const { return find(word).has_value(); }
  bool erase(PackedView word);
  std::size_t size() const { return live_; }

 private:
  static constexpr std::uint32_t kEmpty = 0xFFFFFFFFu;
  static constexpr std::uint32_t kTomb = 0xFFFFFFFEu;
  void grow();
  std::size_t probe_start(PackedView word) const;

  const WordStore* store_;
  std::vector<std::uint32_t> slots_;
  std::size_t live_ = 0;
  std::size_t used_ = 0;  // live + tombstones
};

}  // namespace carpetq
