// Runs the adaptation transducer over a few attested source words and
// prints the top candidates with their rule traces.

#include <iostream>

#include "rusnor/transducer.hpp"

int main() {
  using rusnor::lexicon::PartOfSpeech;
  using rusnor::transducer::SourceLanguage;
  struct Word {
    const char* text;
    SourceLanguage source;
    std::optional<PartOfSpeech> pos;
  };
  const Word words[] = {{"fisk", SourceLanguage::Norwegian, PartOfSpeech::Noun},
                        {"tønde", SourceLanguage::Norwegian, PartOfSpeech::Noun},
                        {"hav", SourceLanguage::Norwegian, PartOfSpeech::Noun},
                        {"halv", SourceLanguage::Norwegian, PartOfSpeech::Noun},
                        {"mnogo li", SourceLanguage::Russian, std::nullopt},
                        {"kupit", SourceLanguage::Russian, PartOfSpeech::Verb}};
  for (const auto& w : words) {
    std::cout << w.text << '\n';
    const auto candidates = rusnor::transducer::adapt(w.text, w.source, w.pos);
    for (std::size_t i = 0; i < candidates.size() && i < 5; ++i) {
      std::cout << "  " << candidates[i].form << "  <=";
      for (const auto& step : candidates[i].trace.steps) std::cout << ' ' << step.rule_id;
      std::cout << '\n';
    }
  }
}
