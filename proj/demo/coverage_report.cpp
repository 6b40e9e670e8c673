// Scores a canned model answer against the hypothesis catalog and prints
// it next to the hand-encoded published columns.

#include <iostream>

#include "rusnor/coverage.hpp"
#include "rusnor/prompt.hpp"

int main() {
  using namespace rusnor;
  const std::string answer = R"(Here are my hypotheses:
1. Verbs end in -om; the verb suffix attaches to both Russian and Norwegian stems.
2. There are no articles, definite or indefinite.
3. Negation uses njet or ikke before the verb.
4. Nautical and fishing vocabulary (fiska, båt) comes from Norwegian.
5. Word-final voiced consonants are devoiced, as in gaf from hav.
6. Front rounded vowels such as ø are replaced by o or u.)";

  auto m = coverage::table1_matrix();
  const auto hypotheses = agent::extract_hypotheses(answer);
  m.add_column("canned", coverage::match_hypotheses(hypotheses, m.rows()));
  std::cout << coverage::render_text(m);

  const auto r = m.union_recall({"Sonnet", "canned"});
  std::cout << "\nunion with Sonnet: " << r.matched << "/" << r.total << '\n';
}
