#include "reft/vocab.hpp"

namespace reft {

Vocab::Vocab() {
  alphabet_ = "\n !'(),-.*/+0123456789:;=?";
  for (char c = 'A'; c <= 'Z'; ++c) alphabet_.push_back(c);
  alphabet_.push_back('_');
  for (char c = 'a'; c <= 'z'; ++c) alphabet_.push_back(c);
  to_id_.fill(-1);
  for (size_t i = 0; i < alphabet_.size(); ++i)
    to_id_[static_cast<unsigned char>(alphabet_[i])] = static_cast<int>(i) + 2;
}

int Vocab::id_of(char c) const { return to_id_[static_cast<unsigned char>(c)]; }

char Vocab::char_of(int id) const { return alphabet_[static_cast<size_t>(id - 2)]; }

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) {
    const int id = id_of(c);
    if (id < 0)
      throw TokenizeError("character not in vocabulary: '" + std::string(1, c) + "'");
    ids.push_back(id);
  }
  return ids;
}

std::string Vocab::decode(std::span<const int> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad) continue;
    out.push_back(char_of(id));
  }
  return out;
}

std::vector<int> encode_with_eos(const Vocab& v, std::string_view text) {
  std::vector<int> ids = v.encode(text);
  ids.push_back(Vocab::kEos);
  return ids;
}

}  // namespace reft
