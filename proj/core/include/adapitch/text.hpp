#pragma once

#include <map>
#include <string>
#include <vector>

namespace adapitch {

// Word -> phoneme-list mapping loaded from a plain text file:
// one `word<TAB>phoneme phoneme ...` entry per line, `#` starts a comment.
struct Lexicon {
  std::map<std::string, std::vector<std::string>> entries;

  static Lexicon load(const std::string& path);
  void save(const std::string& path) const;
};

// Token inventory: specials, then the lexicon's phoneme set, then single
// characters for the out-of-lexicon fallback; ids are stable given the inputs.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  std::vector<std::string> tokens;       // id -> symbol
  std::map<std::string, int> index;      // symbol -> id

  static Vocabulary build(const Lexicon& lexicon);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens.size()); }
  /// Id of a symbol, kUnk when absent.
  int id(const std::string& symbol) const;
};

struct PhonemeSequence {
  std::vector<int> ids;

  int length() const { return static_cast<int>(ids.size()); }
};

/// Whitespace-split words mapped through the lexicon; out-of-lexicon words
/// fall back to per-character tokens, unmapped characters become UNK.
PhonemeSequence text_to_phonemes(const std::string& text, const Lexicon& lexicon,
                                 const Vocabulary& vocab);

}  // namespace adapitch
