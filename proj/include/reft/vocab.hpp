#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reft {

struct TokenizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Character-level tokenizer over a fixed alphabet of digits, letters,
// operators, whitespace and punctuation. Ids are dense in [0, size()).
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;

  Vocab();

  int size() const { return static_cast<int>(alphabet_.size()) + 2; }

  // Throws TokenizeError on out-of-alphabet characters.
  std::vector<int> encode(std::string_view text) const;

  // <eos> decodes to the empty string and terminates decoding.
  std::string decode(std::span<const int> ids) const;

  int id_of(char c) const;     // -1 if not covered
  char char_of(int id) const;  // valid for id >= 2

 private:
  std::string alphabet_;
  std::array<int, 256> to_id_;
};

// Tokens of `text` followed by <eos>: the action sequence a_1..a_L.
std::vector<int> encode_with_eos(const Vocab& v, std::string_view text);

}  // namespace reft
