#include "adapitch/text.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "adapitch/error.hpp"

namespace adapitch {

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("lexicon: cannot open " + path);
  Lexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto tab = line.find('\t');
    check(tab != std::string::npos,
          "lexicon: missing tab separator at " + path + ":" + std::to_string(line_no));
    const std::string word = line.substr(0, tab);
    std::istringstream rest(line.substr(tab + 1));
    std::vector<std::string> phonemes;
    std::string ph;
    while (rest >> ph) phonemes.push_back(ph);
    check(!word.empty() && !phonemes.empty(),
          "lexicon: malformed entry at " + path + ":" + std::to_string(line_no));
    lex.entries[word] = std::move(phonemes);
  }
  return lex;
}

void Lexicon::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("lexicon: cannot write " + path);
  for (const auto& [word, phonemes] : entries) {
    out << word << '\t';
    for (size_t i = 0; i < phonemes.size(); ++i) {
      if (i) out << ' ';
      out << phonemes[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("lexicon: write failed for " + path);
}

Vocabulary Vocabulary::build(const Lexicon& lexicon) {
  std::set<std::string> symbols;
  for (const auto& [word, phonemes] : lexicon.entries)
    for (const auto& ph : phonemes) symbols.insert(ph);
  // fallback character inventory
  for (char c = 'a'; c <= 'z'; ++c) symbols.insert(std::string(1, c));
  for (char c = '0'; c <= '9'; ++c) symbols.insert(std::string(1, c));
  symbols.insert("'");
  symbols.insert("-");

  std::vector<std::string> tokens = {"<pad>", "<unk>", "<bos>", "<eos>"};
  for (const auto& s : symbols) tokens.push_back(s);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens = std::move(tokens);
  for (size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = static_cast<int>(i);
  return v;
}

int Vocabulary::id(const std::string& symbol) const {
  auto it = index.find(symbol);
  return it == index.end() ? kUnk : it->second;
}

PhonemeSequence text_to_phonemes(const std::string& text, const Lexicon& lexicon,
                                 const Vocabulary& vocab) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string word;
  while (in >> word) words.push_back(word);
  check(!words.empty(), "text_to_phonemes: empty text after normalization");

  PhonemeSequence seq;
  for (const auto& w : words) {
    auto it = lexicon.entries.find(w);
    if (it != lexicon.entries.end()) {
      for (const auto& ph : it->second) seq.ids.push_back(vocab.id(ph));
    } else {
      // character fallback, lowercased
      for (char c : w) {
        const char lc = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        seq.ids.push_back(vocab.id(std::string(1, lc)));
      }
    }
  }
  return seq;
}

}  // namespace adapitch
