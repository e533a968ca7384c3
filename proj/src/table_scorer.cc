#include "kbc/table_scorer.h"

#include <fstream>
#include <istream>
#include <sstream>
#include <vector>

#include "kbc/error.h"

namespace kbc {

TableScorer TableScorer::Parse(std::istream& in, const std::string& source,
                               const Vocab& vocab, double default_score) {
  TableScorer table(vocab.num_entities(), default_score);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 4) {
      throw ParseError(source, line_no, "expected 4 tab-separated fields");
    }
    auto s = vocab.entities.Find(fields[0]);
    auto r = vocab.relations.Find(fields[1]);
    auto o = vocab.entities.Find(fields[2]);
    if (!s || !r || !o) {
      throw VocabError(source + ":" + std::to_string(line_no) +
                       ": unknown entity or relation name");
    }
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "bad score '" + fields[3] + "'");
    }
    table.Set({*s, *r, *o}, score);
  }
  return table;
}

TableScorer TableScorer::Load(const std::filesystem::path& path,
                              const Vocab& vocab, double default_score) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return Parse(in, path.string(), vocab, default_score);
}

double TableScorer::Score(EntityId i, RelationId k, EntityId j) const {
  auto it = scores_.find({i, k, j});
  return it == scores_.end() ? default_score_ : it->second;
}

}  // namespace kbc
