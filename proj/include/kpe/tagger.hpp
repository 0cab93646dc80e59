#pragma once

#include <array>
#include <cctype>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kpe/io.hpp"
#include "kpe/tokenize.hpp"

namespace kpe {

inline std::string_view pos_tag_name(PosTag t) {
  switch (t) {
    case PosTag::Adj: return "ADJ";
    case PosTag::Noun: return "NOUN";
    case PosTag::Propn: return "PROPN";
    case PosTag::Verb: return "VERB";
    case PosTag::Adv: return "ADV";
    case PosTag::Pron: return "PRON";
    case PosTag::Det: return "DET";
    case PosTag::Adp: return "ADP";
    case PosTag::Num: return "NUM";
    case PosTag::Punct: return "PUNCT";
    case PosTag::Other: return "OTHER";
  }
  return "OTHER";
}

inline PosTag parse_pos_tag(std::string_view s) {
  static const std::unordered_map<std::string_view, PosTag> names = {
      {"ADJ", PosTag::Adj},   {"NOUN", PosTag::Noun}, {"PROPN", PosTag::Propn},
      {"VERB", PosTag::Verb}, {"ADV", PosTag::Adv},   {"PRON", PosTag::Pron},
      {"DET", PosTag::Det},   {"ADP", PosTag::Adp},   {"NUM", PosTag::Num},
      {"PUNCT", PosTag::Punct}, {"OTHER", PosTag::Other}};
  auto it = names.find(s);
  if (it == names.end()) throw std::runtime_error("unknown POS tag: " + std::string(s));
  return it->second;
}

/// Contract for filling Token::pos. Implementations must be deterministic.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual void tag(std::vector<Token>& tokens) const = 0;
};

/// Default tagger: closed-class lexicon, adjective/adverb suffix heuristics,
/// mid-sentence capitalization for proper nouns, and NOUN for anything
/// unknown so that out-of-vocabulary slang stays candidate-eligible.
class RuleTagger final : public PosTagger {
 public:
  RuleTagger() { load_builtin(); }

  void add_word(std::string_view lower, PosTag tag) { lexicon_[std::string(lower)] = tag; }

  void tag(std::vector<Token>& tokens) const override {
    std::size_t current_sentence = static_cast<std::size_t>(-1);
    bool seen_word_in_sentence = false;
    for (Token& t : tokens) {
      if (t.sentence != current_sentence) {
        current_sentence = t.sentence;
        seen_word_in_sentence = false;
      }
      t.pos = classify(t, seen_word_in_sentence);
      if (t.pos != PosTag::Punct) seen_word_in_sentence = true;
    }
  }

 private:
  PosTag classify(const Token& t, bool seen_word_in_sentence) const {
    const std::string& w = t.lower;
    unsigned char first = static_cast<unsigned char>(t.surface.empty() ? ' ' : t.surface[0]);
    if (!std::isalnum(first) && first < 0x80) return PosTag::Punct;
    if (std::isdigit(first)) return PosTag::Num;

    if (auto it = lexicon_.find(w); it != lexicon_.end()) return it->second;

    auto ends = [&](std::string_view suf) {
      return w.size() > suf.size() + 2 &&
             std::string_view(w).substr(w.size() - suf.size()) == suf;
    };
    if (ends("ly")) return PosTag::Adv;
    for (std::string_view suf : {"ous", "ful", "ive", "able", "ible", "ish", "less", "ical", "ic"})
      if (ends(suf)) return PosTag::Adj;

    if (std::isupper(first) && seen_word_in_sentence) return PosTag::Propn;
    return PosTag::Noun;
  }

  void load_builtin() {
    static constexpr std::string_view dets =
        "the a an this that these those some any each every no all both either neither "
        "another such what which";
    static constexpr std::string_view prons =
        "i me my mine you your yours he him his she her hers it its we us our ours they "
        "them their theirs myself yourself himself herself itself ourselves yourselves "
        "themselves who whom whose someone anyone everyone nobody somebody anybody "
        "everybody something anything everything nothing one";
    static constexpr std::string_view adps =
        "of in on at by for with from to into onto about over under after before between "
        "through during without within against among along across behind beyond above "
        "below near until since upon per off up down out around inside outside despite "
        "toward towards via";
    static constexpr std::string_view conj =
        "and or but nor so yet if because although though while whereas unless than as "
        "whether when where why how oh hey yeah thanks thank please hello hi";
    static constexpr std::string_view advs =
        "very really not never always often sometimes usually again still just only quite "
        "too also maybe perhaps now then here there soon already almost ever later earlier "
        "yesterday today tomorrow";
    static constexpr std::string_view verbs =
        "am is are was were be been being have has had having do does did done doing "
        "will would shall should can could may might must go goes went gone going get "
        "gets got gotten getting take takes took taken taking make makes made making "
        "know knows knew known knowing think thinks thought thinking feel feels felt "
        "feeling say says said saying tell tells told telling ask asks asked asking "
        "want wants wanted wanting need needs needed needing try tries tried trying "
        "use uses used using start starts started starting stop stops stopped stopping "
        "keep keeps kept keeping seem seems seemed help helps helped helping come comes "
        "came coming see sees saw seen seeing look looks looked looking find finds found "
        "finding give gives gave given giving work works worked working put puts putting "
        "mean means meant leave leaves left become becomes became talk talks talked "
        "turn turns turned begin begins began begun show shows showed shown hear hears "
        "heard play played run runs ran move moved live lives lived believe believed "
        "bring brings brought happen happens happened write writes wrote sit sits sat "
        "stand stands stood lose loses lost pay pays paid meet met include includes "
        "included continue continues continued set sets let lets follow follows followed "
        "suggest suggests suggested prescribe prescribes prescribed wish wishes wished "
        "deal dealt stay stayed wait waited";
    static constexpr std::string_view adjs =
        "good better best bad worse worst big small long short high low new old early "
        "late hard easy sick healthy severe mild chronic acute tired weak strong happy "
        "sad horrible terrible awful great whole own free full empty cold hot warm nice "
        "fine okay ok same different next last first second third few several many much "
        "more most less least little extreme constant normal regular common rare serious "
        "major minor daily weekly able unable safe dangerous legal illegal generic";
    static constexpr std::string_view contractions =
        "i'm i've i'll i'd you're you've you'll you'd he's she's it's we're we've we'll "
        "they're they've they'll don't doesn't didn't won't wouldn't can't couldn't "
        "shouldn't isn't aren't wasn't weren't haven't hasn't hadn't ain't let's that's "
        "there's here's what's who's y'all";
    static constexpr std::string_view num_words =
        "two three four five six seven eight nine ten hundred thousand million";
    // common nouns the suffix heuristics would otherwise misread
    static constexpr std::string_view nouns =
        "music magic logic clinic topic critic traffic panic medic fabric republic "
        "attic table cable vegetable family belly supply reply bottle people life time "
        "day week month year";

    auto add_all = [&](std::string_view words, PosTag tag) {
      for (const std::string& w : split(words, ' '))
        if (!w.empty()) lexicon_.emplace(w, tag);
    };
    add_all(dets, PosTag::Det);
    add_all(prons, PosTag::Pron);
    add_all(adps, PosTag::Adp);
    add_all(conj, PosTag::Other);
    add_all(advs, PosTag::Adv);
    add_all(verbs, PosTag::Verb);
    add_all(adjs, PosTag::Adj);
    add_all(contractions, PosTag::Verb);
    add_all(num_words, PosTag::Num);
    add_all(nouns, PosTag::Noun);
  }

  std::unordered_map<std::string, PosTag> lexicon_;
};

/// Reads pre-tagged input: one "surface<TAB>POS" pair per line, blank line
/// between sentences. The alternative to the built-in tagger.
inline std::vector<Token> load_pretagged(const std::filesystem::path& path) {
  std::vector<Token> tokens;
  std::size_t sentence = 0;
  std::size_t offset = 0;
  bool sentence_has_tokens = false;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) {
      if (sentence_has_tokens) {
        ++sentence;
        sentence_has_tokens = false;
      }
      return;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("pretagged line " + std::to_string(line_no) + ": missing tab");
    Token t;
    t.surface = line.substr(0, tab);
    t.lower = to_lower(t.surface);
    t.pos = parse_pos_tag(trim(std::string_view(line).substr(tab + 1)));
    t.begin = offset;
    t.end = offset + t.surface.size();
    t.sentence = sentence;
    offset = t.end + 1;  // synthetic single-space layout
    tokens.push_back(std::move(t));
    sentence_has_tokens = true;
  });
  return tokens;
}

}  // namespace kpe
