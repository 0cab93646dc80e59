#pragma once

// Classic Porter suffix-stripping stemmer (the original 1980 rule set,
// not Porter2/Snowball). Operates on single lowercase tokens.

#include <string>
#include <string_view>

namespace kpe {

namespace porter_detail {

inline bool is_vowel_at(const std::string& w, std::size_t i) {
  char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
  // y counts as a vowel when preceded by a consonant
  if (c == 'y' && i > 0) return !is_vowel_at(w, i - 1);
  return false;
}

// Number of VC sequences in the [C](VC)^m[V] decomposition of w[0..len).
inline int measure(const std::string& w, std::size_t len) {
  int m = 0;
  std::size_t i = 0;
  while (i < len && !is_vowel_at(w, i)) ++i;
  while (i < len) {
    while (i < len && is_vowel_at(w, i)) ++i;
    if (i == len) break;
    ++m;
    while (i < len && !is_vowel_at(w, i)) ++i;
  }
  return m;
}

inline bool has_vowel(const std::string& w, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i)
    if (is_vowel_at(w, i)) return true;
  return false;
}

inline bool ends_double_consonant(const std::string& w, std::size_t len) {
  if (len < 2) return false;
  return w[len - 1] == w[len - 2] && !is_vowel_at(w, len - 1);
}

// cvc at the end, where the final consonant is not w, x or y.
inline bool ends_cvc(const std::string& w, std::size_t len) {
  if (len < 3) return false;
  if (is_vowel_at(w, len - 3) || !is_vowel_at(w, len - 2) || is_vowel_at(w, len - 1)) return false;
  char c = w[len - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

inline bool ends_with(const std::string& w, std::size_t len, std::string_view suffix) {
  if (suffix.size() > len) return false;
  return std::string_view(w).substr(len - suffix.size(), suffix.size()) == suffix;
}

}  // namespace porter_detail

/// Stem of a single lowercase word under the classic Porter rules.
/// Idempotent on its own outputs; words of length <= 2 are returned unchanged.
inline std::string stem(std::string_view word) {
  using namespace porter_detail;
  std::string w(word);
  for (char& c : w)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  if (w.size() <= 2) return w;

  std::size_t len = w.size();
  auto m_of_stem = [&](std::size_t suffix_len) { return measure(w, len - suffix_len); };

  // Step 1a
  if (ends_with(w, len, "sses")) len -= 2;
  else if (ends_with(w, len, "ies")) len -= 2;
  else if (ends_with(w, len, "ss")) { /* keep */ }
  else if (ends_with(w, len, "s")) len -= 1;

  // Step 1b
  bool cleanup = false;
  if (ends_with(w, len, "eed")) {
    if (m_of_stem(3) > 0) len -= 1;
  } else if (ends_with(w, len, "ed") && has_vowel(w, len - 2)) {
    len -= 2;
    cleanup = true;
  } else if (ends_with(w, len, "ing") && has_vowel(w, len - 3)) {
    len -= 3;
    cleanup = true;
  }
  if (cleanup) {
    w.resize(len);
    if (ends_with(w, len, "at") || ends_with(w, len, "bl") || ends_with(w, len, "iz")) {
      w += 'e';
      ++len;
    } else if (ends_double_consonant(w, len) && w[len - 1] != 'l' && w[len - 1] != 's' &&
               w[len - 1] != 'z') {
      --len;
    } else if (measure(w, len) == 1 && ends_cvc(w, len)) {
      w.resize(len);
      w += 'e';
      ++len;
    }
    w.resize(len);
  }

  // Step 1c
  if (ends_with(w, len, "y") && has_vowel(w, len - 1)) {
    w.resize(len);
    w[len - 1] = 'i';
  }

  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
  };
  auto apply_longest = [&](const Rule* rules, std::size_t n, int min_measure) {
    const Rule* best = nullptr;
    for (std::size_t r = 0; r < n; ++r) {
      if (ends_with(w, len, rules[r].suffix) &&
          (!best || rules[r].suffix.size() > best->suffix.size()))
        best = &rules[r];
    }
    if (!best) return;
    std::size_t stem_len = len - best->suffix.size();
    if (measure(w, stem_len) > min_measure) {
      w.resize(stem_len);
      w.append(best->replacement);
      len = w.size();
    }
  };

  // Step 2
  static constexpr Rule step2[] = {
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"}};
  apply_longest(step2, sizeof(step2) / sizeof(step2[0]), 0);

  // Step 3
  static constexpr Rule step3[] = {{"icate", "ic"}, {"ative", ""}, {"alize", "al"},
                                   {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""},
                                   {"ness", ""}};
  apply_longest(step3, sizeof(step3) / sizeof(step3[0]), 0);

  // Step 4: plain deletions at m > 1; "ion" additionally requires stem ending s or t.
  static constexpr std::string_view step4[] = {"ement", "ance", "ence", "able", "ible",
                                               "ment",  "ant",  "ent",  "ion",  "ism",
                                               "ate",   "iti",  "ous",  "ive",  "ize",
                                               "al",    "er",   "ic",   "ou"};
  {
    std::string_view best;
    for (std::string_view s : step4)
      if (ends_with(w, len, s) && s.size() > best.size()) best = s;
    if (!best.empty()) {
      std::size_t stem_len = len - best.size();
      bool ok = measure(w, stem_len) > 1;
      if (ok && best == "ion")
        ok = stem_len > 0 && (w[stem_len - 1] == 's' || w[stem_len - 1] == 't');
      if (ok) len = stem_len;
    }
  }

  // Step 5a
  if (ends_with(w, len, "e")) {
    int m = measure(w, len - 1);
    if (m > 1 || (m == 1 && !ends_cvc(w, len - 1))) --len;
  }
  // Step 5b
  if (measure(w, len) > 1 && ends_double_consonant(w, len) && w[len - 1] == 'l') --len;

  w.resize(len);
  return w;
}

}  // namespace kpe
